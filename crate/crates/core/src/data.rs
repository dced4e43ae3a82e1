//! Inputs, labelled examples and the append-only dataset.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{argument, DeupError, Result};
use crate::rng::RngStream;

/// A point in the input space of an oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputPoint(Vec<f64>);

impl InputPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(argument("input point must have at least one coordinate"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(argument(format!("coordinate {i} is not finite ({})", coords[i])));
        }
        Ok(Self(coords))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Bitwise coordinate equality, the membership rule used for the seen bit.
    pub fn same_bits(&self, other: &InputPoint) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().zip(&other.0).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl AsRef<[f64]> for InputPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub x: InputPoint,
    pub y: f64,
    /// Groups repeated oracle queries issued at the same `x`.
    pub replicate_id: Option<u64>,
}

impl LabeledExample {
    pub fn new(x: InputPoint, y: f64) -> Result<Self> {
        if !y.is_finite() {
            return Err(argument(format!("target must be finite, got {y}")));
        }
        Ok(Self { x, y, replicate_id: None })
    }

    pub fn with_replicate(mut self, id: u64) -> Self {
        self.replicate_id = Some(id);
        self
    }
}

/// Ordered, append-only collection of labelled examples.
///
/// Duplicated inputs are kept as distinct examples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    examples: Vec<LabeledExample>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_examples(examples: Vec<LabeledExample>) -> Result<Self> {
        let mut d = Self::new();
        for e in examples {
            d.push(e)?;
        }
        Ok(d)
    }

    /// Convenience constructor from raw coordinate rows and targets.
    pub fn from_xy(xs: &[Vec<f64>], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(argument(format!("{} inputs but {} targets", xs.len(), ys.len())));
        }
        let mut d = Self::new();
        for (x, &y) in xs.iter().zip(ys) {
            d.push(LabeledExample::new(InputPoint::new(x.clone())?, y)?)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, example: LabeledExample) -> Result<()> {
        if let Some(dim) = self.dimension() {
            if example.x.dimension() != dim {
                return Err(argument(format!(
                    "example has dimension {} but dataset has dimension {dim}",
                    example.x.dimension()
                )));
            }
        }
        if let Some(id) = example.replicate_id {
            let clash = self
                .examples
                .iter()
                .any(|e| e.replicate_id == Some(id) && !e.x.same_bits(&example.x));
            if clash {
                return Err(argument(format!(
                    "replicate group {id} already holds a different input"
                )));
            }
        }
        self.examples.push(example);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dimension(&self) -> Option<usize> {
        self.examples.first().map(|e| e.x.dimension())
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledExample> {
        self.examples.iter()
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.examples.iter().map(|e| e.x.coords().to_vec()).collect()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.examples.iter().map(|e| e.y).collect()
    }

    /// Exact-equality membership test.
    pub fn contains(&self, x: &InputPoint) -> bool {
        self.examples.iter().any(|e| e.x.same_bits(x))
    }

    pub fn best_target(&self) -> Option<f64> {
        self.examples.iter().map(|e| e.y).reduce(f64::max)
    }

    /// Content hash over every coordinate and target bit pattern.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |v: u64| {
            for b in v.to_le_bytes() {
                h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        mix(self.examples.len() as u64);
        for e in &self.examples {
            for c in e.x.coords() {
                mix(c.to_bits());
            }
            mix(e.y.to_bits());
        }
        h
    }

    fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
        }
    }
}

/// Randomly partitions `d` into `k` disjoint subsets whose sizes differ by at
/// most one; the first `|d| mod k` subsets receive the extra element.
pub fn split_dataset(d: &Dataset, k: usize, rng: &mut RngStream) -> Result<Vec<Dataset>> {
    if k < 2 {
        return Err(argument(format!("need at least 2 folds, got {k}")));
    }
    if k > d.len() {
        return Err(DeupError::Argument(format!(
            "cannot split {} examples into {k} folds",
            d.len()
        )));
    }
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.shuffle(rng);
    let base = d.len() / k;
    let extra = d.len() % k;
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let size = base + usize::from(i < extra);
        folds.push(d.subset(&order[start..start + size]));
        start += size;
    }
    Ok(folds)
}
