//! Direct epistemic uncertainty prediction with Gaussian-process and MLP
//! learners, plus a sequential model-based optimization harness built on it.

pub mod acquisition;
pub mod benchmarks;
pub mod cli;
pub mod config;
pub mod data;
pub mod density;
pub mod deup;
pub mod error;
pub mod fig1;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod smo;
pub mod stats;
pub mod theory;

pub use error::{DeupError, Result};
