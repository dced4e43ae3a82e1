//! Aleatoric-uncertainty estimators `a(x)`.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::benchmarks::NoiseProfile;
use crate::data::{Dataset, InputPoint};
use crate::error::{argument, DeupError, Result};
use crate::models::{FittedModel, Learner};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AleatoricMode {
    /// Noise-free oracle: `a ≡ 0`.
    Zero,
    /// Noise variance supplied by the caller.
    Known,
    /// Learned from repeated oracle queries at identical inputs.
    Replicates,
}

impl FromStr for AleatoricMode {
    type Err = DeupError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zero" => Ok(Self::Zero),
            "known" => Ok(Self::Known),
            "replicates" => Ok(Self::Replicates),
            other => Err(argument(format!("unknown aleatoric mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AleatoricEstimator {
    mode: AleatoricMode,
    model: Option<FittedModel>,
    known: Option<NoiseProfile>,
}

impl AleatoricEstimator {
    pub fn zero() -> Self {
        Self { mode: AleatoricMode::Zero, model: None, known: None }
    }

    pub fn known(profile: NoiseProfile) -> Self {
        Self { mode: AleatoricMode::Known, model: None, known: Some(profile) }
    }

    pub fn mode(&self) -> AleatoricMode {
        self.mode
    }

    /// Estimated noise variance at `x`, never negative.
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.mode {
            AleatoricMode::Zero => 0.0,
            AleatoricMode::Known => self.known.as_ref().map_or(0.0, |p| p.variance(x)),
            AleatoricMode::Replicates => self.model.as_ref().map_or(0.0, |m| m.predict(x).max(0.0)),
        }
    }
}

/// Repeated outcomes observed at one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateGroup {
    pub x: InputPoint,
    pub outcomes: Vec<f64>,
}

/// `K/(K-1)` times the biased empirical variance of the outcomes.
pub fn replicate_target(outcomes: &[f64]) -> Result<f64> {
    let k = outcomes.len();
    if k < 2 {
        return Err(argument(format!("replicate group needs K >= 2 outcomes, got {k}")));
    }
    let kf = k as f64;
    let mean = outcomes.iter().sum::<f64>() / kf;
    let biased = outcomes.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / kf;
    Ok(kf / (kf - 1.0) * biased)
}

/// Collects groups of examples sharing a replicate id (with at least two members).
pub fn replicate_groups(d: &Dataset) -> Vec<ReplicateGroup> {
    let mut groups: BTreeMap<u64, ReplicateGroup> = BTreeMap::new();
    for e in d.iter() {
        if let Some(id) = e.replicate_id {
            groups
                .entry(id)
                .or_insert_with(|| ReplicateGroup { x: e.x.clone(), outcomes: Vec::new() })
                .outcomes
                .push(e.y);
        }
    }
    groups.into_values().filter(|g| g.outcomes.len() >= 2).collect()
}

/// Regresses replicate variance targets on the group inputs.
pub fn estimate_aleatoric_from_replicates(
    groups: &[ReplicateGroup],
    regressor: &Learner,
    rng: &mut RngStream,
) -> Result<AleatoricEstimator> {
    if groups.is_empty() {
        return Err(argument("no replicate groups"));
    }
    let targets = groups.iter().map(|g| replicate_target(&g.outcomes)).collect::<Result<Vec<_>>>()?;
    let xs: Vec<Vec<f64>> = groups.iter().map(|g| g.x.coords().to_vec()).collect();
    let model = regressor.fit(&xs, &targets, rng)?;
    Ok(AleatoricEstimator { mode: AleatoricMode::Replicates, model: Some(model), known: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::Oracle;
    use crate::data::LabeledExample;
    use crate::models::GpConfig;

    #[test]
    fn zero_spread() {
        assert_eq!(replicate_target(&[1.0, 1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn two_outcome_group() {
        // biased variance of {0, 2} is 1; scaled by K/(K-1) = 2
        assert!((replicate_target(&[0.0, 2.0]).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singleton_group_is_rejected() {
        let g = ReplicateGroup { x: InputPoint::scalar(0.0).unwrap(), outcomes: vec![1.0] };
        let err = estimate_aleatoric_from_replicates(&[g], &Learner::Gp(GpConfig::default()), &mut RngStream::new(0, "a"));
        assert!(matches!(err, Err(DeupError::Argument(_))));
    }

    #[test]
    fn predictions_are_nonnegative_and_average_to_noise() {
        let oracle = Oracle::synth1d().with_noise(NoiseProfile::Constant(0.5)).unwrap();
        let mut rng = RngStream::new(4, "replicates");
        let groups: Vec<ReplicateGroup> = (0..40)
            .map(|i| {
                let x = InputPoint::scalar(i as f64 / 39.0).unwrap();
                let outcomes = oracle.sample(&x, &mut rng, 5).unwrap();
                ReplicateGroup { x, outcomes }
            })
            .collect();
        let a = estimate_aleatoric_from_replicates(&groups, &Learner::Gp(GpConfig::default()), &mut RngStream::new(1, "a"))
            .unwrap();
        let grid: Vec<f64> = (0..101).map(|i| a.predict(&[i as f64 / 100.0])).collect();
        assert!(grid.iter().all(|v| *v >= 0.0));
        let avg = grid.iter().sum::<f64>() / grid.len() as f64;
        assert!((avg - 0.25).abs() < 0.05, "mean a = {avg}");
    }

    #[test]
    fn groups_from_dataset() {
        let mut d = Dataset::new();
        let x = InputPoint::scalar(0.2).unwrap();
        for (i, y) in [1.0, 1.5, 0.5].into_iter().enumerate() {
            d.push(LabeledExample::new(x.clone(), y).unwrap().with_replicate(7)).unwrap();
            let lone = InputPoint::scalar(0.9 + i as f64 * 0.01).unwrap();
            d.push(LabeledExample::new(lone, 0.0).unwrap()).unwrap();
        }
        let groups = replicate_groups(&d);
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].outcomes, vec![1.0, 1.5, 0.5]);
    }

    #[test]
    fn known_mode_uses_profile() {
        let a = AleatoricEstimator::known(NoiseProfile::Constant(0.3));
        assert!((a.predict(&[1.0]) - 0.09).abs() < 1e-15);
        assert_eq!(AleatoricEstimator::zero().predict(&[1.0]), 0.0);
    }
}
