//! Main predictors and the learner abstraction mapping a dataset to a fitted
//! predictor.

pub mod gp;
pub mod mlp;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, InputPoint};
use crate::error::{argument, Result};
use crate::rng::RngStream;
use crate::stats::sample_variance;

pub use gp::{gp_fit, gp_posterior, GpConfig, GpPredictor, Kernel};
pub use mlp::{mlp_fit, MlpConfig, MlpPredictor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearnerKind {
    Gp,
    Mlp,
}

/// A learning algorithm together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Learner {
    Gp(GpConfig),
    Mlp(MlpConfig),
}

impl Learner {
    pub fn kind(&self) -> LearnerKind {
        match self {
            Learner::Gp(_) => LearnerKind::Gp,
            Learner::Mlp(_) => LearnerKind::Mlp,
        }
    }

    pub fn fit(&self, xs: &[Vec<f64>], ys: &[f64], rng: &mut RngStream) -> Result<FittedModel> {
        match self {
            Learner::Gp(cfg) => GpPredictor::fit(xs, ys, cfg, rng).map(FittedModel::Gp),
            Learner::Mlp(cfg) => MlpPredictor::fit(xs, ys, cfg, rng).map(FittedModel::Mlp),
        }
    }

    pub fn fit_dataset(&self, d: &Dataset, rng: &mut RngStream) -> Result<FittedModel> {
        self.fit(&d.inputs(), &d.targets(), rng)
    }
}

/// A fitted regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    Gp(GpPredictor),
    Mlp(MlpPredictor),
}

impl FittedModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            FittedModel::Gp(g) => g.predict(x),
            FittedModel::Mlp(m) => m.predict(x),
        }
    }

    /// Mean and predictive variance when the model provides one.
    pub fn predict_with_variance(&self, x: &[f64]) -> Option<(f64, f64)> {
        match self {
            FittedModel::Gp(g) => Some(g.posterior_unchecked(x)),
            FittedModel::Mlp(_) => None,
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            FittedModel::Gp(g) => g.dimension(),
            FittedModel::Mlp(m) => m.dimension(),
        }
    }

    pub fn as_gp(&self) -> Option<&GpPredictor> {
        match self {
            FittedModel::Gp(g) => Some(g),
            FittedModel::Mlp(_) => None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Independently seeded fits of one learner on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    members: Vec<FittedModel>,
}

impl Ensemble {
    /// Member `i` is fitted with the substream `member-i` of `rng`.
    pub fn fit(learner: &Learner, d: &Dataset, m: usize, rng: &RngStream) -> Result<Self> {
        if m < 2 {
            return Err(argument(format!("ensemble needs at least 2 members, got {m}")));
        }
        let members = (0..m)
            .map(|i| learner.fit_dataset(d, &mut rng.substream(format!("member-{i}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { members })
    }

    pub fn from_members(members: Vec<FittedModel>) -> Result<Self> {
        if members.len() < 2 {
            return Err(argument("ensemble needs at least 2 members"));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[FittedModel] {
        &self.members
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        self.members.iter().map(|m| m.predict(x)).sum::<f64>() / self.members.len() as f64
    }

    /// Unbiased sample variance of the member predictions at `x`.
    pub fn variance(&self, x: &[f64]) -> f64 {
        let preds: Vec<f64> = self.members.iter().map(|m| m.predict(x)).collect();
        sample_variance(&preds).max(0.0)
    }
}

/// Empirical variance at `x` of `m` independently seeded fits of `learner`.
pub fn ensemble_variance(
    learner: &Learner,
    d: &Dataset,
    x: &InputPoint,
    m: usize,
    rng: &RngStream,
) -> Result<f64> {
    let ensemble = Ensemble::fit(learner, d, m, rng)?;
    if let Some(dim) = d.dimension() {
        if dim != x.dimension() {
            return Err(argument(format!("query dimension {} vs data dimension {dim}", x.dimension())));
        }
    }
    Ok(ensemble.variance(x.coords()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_mlp() -> Learner {
        Learner::Mlp(MlpConfig { hidden: vec![16, 16], epochs: 100, ..MlpConfig::default() })
    }

    #[test]
    fn identical_members_have_zero_variance() {
        let d = Dataset::from_xy(&[vec![0.0], vec![1.0], vec![2.0]], &[0.0, 1.0, 0.5]).unwrap();
        let learner = small_mlp();
        let members: Vec<FittedModel> = (0..4)
            .map(|_| learner.fit_dataset(&d, &mut RngStream::new(3, "same")).unwrap())
            .collect();
        let e = Ensemble::from_members(members).unwrap();
        assert_eq!(e.variance(&[7.0]), 0.0);
    }

    #[test]
    fn two_member_variance_is_finite() {
        let d = Dataset::from_xy(&[vec![0.0], vec![1.0]], &[1.0, 1.0]).unwrap();
        let v = ensemble_variance(&small_mlp(), &d, &InputPoint::scalar(0.5).unwrap(), 2, &RngStream::new(1, "ens"))
            .unwrap();
        assert!(v.is_finite() && v >= 0.0);
    }

    #[test]
    fn ensemble_needs_two_members() {
        let d = Dataset::from_xy(&[vec![0.0], vec![1.0]], &[1.0, 1.0]).unwrap();
        assert!(ensemble_variance(&small_mlp(), &d, &InputPoint::scalar(0.5).unwrap(), 1, &RngStream::new(1, "e")).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let d = Dataset::from_xy(&[vec![0.1], vec![0.4], vec![0.9]], &[0.3, -0.2, 1.7]).unwrap();
        let g = Learner::Gp(GpConfig::default()).fit_dataset(&d, &mut RngStream::new(5, "gp")).unwrap();
        let back = FittedModel::from_json(&g.to_json().unwrap()).unwrap();
        for q in [0.0, 0.25, 0.77, 2.0] {
            let (a, b) = (g.predict_with_variance(&[q]).unwrap(), back.predict_with_variance(&[q]).unwrap());
            assert!((a.0 - b.0).abs() <= 1e-12 && (a.1 - b.1).abs() <= 1e-12);
        }
        let m = small_mlp().fit_dataset(&d, &mut RngStream::new(5, "mlp")).unwrap();
        let back = FittedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
    }
}
