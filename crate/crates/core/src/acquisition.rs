//! Acquisition functions and their maximization over box domains.
//!
//! Everything here maximizes: larger scores are better and `best` is the
//! largest value observed so far.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::InputPoint;
use crate::deup::UncertaintyModel;
use crate::error::{argument, DeupError, Result};
use crate::models::gp::GpPredictor;
use crate::rng::RngStream;
use crate::stats::{normal_cdf, normal_pdf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(argument("box bounds must be nonempty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(argument(format!("box needs finite lower < upper, got {lower:?} / {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dimension() && x.iter().enumerate().all(|(j, v)| *v >= self.lower[j] && *v <= self.upper[j])
    }

    pub fn clip(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[j], self.upper[j]);
        }
    }

    pub fn sample_uniform(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| rng.gen_range(*l..=*u)).collect()
    }

    pub fn sample_point(&self, rng: &mut impl Rng) -> InputPoint {
        InputPoint::new(self.sample_uniform(rng)).expect("box samples are finite")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AcquisitionKind {
    Ei,
    Ucb,
    DeupEi,
    DeupUcb,
    Random,
}

impl AcquisitionKind {
    pub const ALL: [AcquisitionKind; 5] = [Self::Ei, Self::Ucb, Self::DeupEi, Self::DeupUcb, Self::Random];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ei => "EI",
            Self::Ucb => "UCB",
            Self::DeupEi => "DEUP_EI",
            Self::DeupUcb => "DEUP_UCB",
            Self::Random => "RANDOM",
        }
    }

    pub fn uses_deup(self) -> bool {
        matches!(self, Self::DeupEi | Self::DeupUcb)
    }

    pub fn uses_gp(self) -> bool {
        matches!(self, Self::Ei | Self::Ucb)
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcquisitionKind {
    type Err = DeupError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        match norm.as_str() {
            "EI" | "GP_EI" => Ok(Self::Ei),
            "UCB" | "GP_UCB" => Ok(Self::Ucb),
            "DEUP_EI" => Ok(Self::DeupEi),
            "DEUP_UCB" => Ok(Self::DeupUcb),
            "RANDOM" => Ok(Self::Random),
            _ => Err(argument(format!("unknown acquisition `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    pub beta: f64,
    pub xi: f64,
    pub n_candidates: usize,
    pub n_refine: usize,
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind) -> Self {
        Self { kind, beta: 2.0, xi: 0.01, n_candidates: 2048, n_refine: 5 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_candidates == 0 {
            return Err(DeupError::Validation("n_candidates must be >= 1".into()));
        }
        if !(self.beta > 0.0) {
            return Err(DeupError::Validation(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.xi >= 0.0) {
            return Err(DeupError::Validation(format!("xi must be nonnegative, got {}", self.xi)));
        }
        Ok(())
    }
}

/// Closed-form expected improvement of a Gaussian over `best + xi`.
pub fn expected_improvement(mean: f64, variance: f64, best: f64, xi: f64) -> f64 {
    let gain = mean - best - xi;
    let sigma = variance.max(0.0).sqrt();
    if sigma == 0.0 {
        return gain.max(0.0);
    }
    let z = gain / sigma;
    (gain * normal_cdf(z) + sigma * normal_pdf(z)).max(0.0)
}

pub fn ucb(mean: f64, variance: f64, beta: f64) -> f64 {
    mean + beta * variance.max(0.0).sqrt()
}

/// Model the acquisition function is evaluated against.
#[derive(Debug, Clone, Copy)]
pub enum SurrogateContext<'a> {
    Gp { model: &'a GpPredictor, best: f64 },
    Deup { model: &'a UncertaintyModel, best: f64 },
    None,
}

fn mismatch(kind: AcquisitionKind) -> DeupError {
    argument(format!("acquisition {kind} needs a matching model context"))
}

/// Mean and variance the acquisition treats as a Gaussian belief at `x`.
fn belief(kind: AcquisitionKind, x: &InputPoint, ctx: &SurrogateContext<'_>) -> Result<(f64, f64, f64)> {
    match (kind, ctx) {
        (AcquisitionKind::Ei | AcquisitionKind::Ucb, SurrogateContext::Gp { model, best }) => {
            let (m, v) = model.posterior(x.coords())?;
            Ok((m, v, *best))
        }
        (AcquisitionKind::DeupEi | AcquisitionKind::DeupUcb, SurrogateContext::Deup { model, best }) => {
            if Some(x.dimension()) != model.context.dataset().dimension() {
                return Err(argument("query dimension does not match the model"));
            }
            Ok((model.mean(x.coords()), model.epistemic(x), *best))
        }
        _ => Err(mismatch(kind)),
    }
}

fn hash_unit(x: &InputPoint) -> f64 {
    let mut h = crate::rng::derive_seed(0, "random-score");
    for v in x.coords() {
        h = crate::rng::derive_seed(h ^ v.to_bits(), "coord");
    }
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Acquisition value at `x`. `RANDOM` yields a pseudo-uniform draw in
/// `[0, 1)` keyed on the bits of `x`.
pub fn score(spec: &AcquisitionSpec, x: &InputPoint, ctx: &SurrogateContext<'_>) -> Result<f64> {
    if spec.kind == AcquisitionKind::Random {
        return Ok(hash_unit(x));
    }
    let (mean, var, best) = belief(spec.kind, x, ctx)?;
    Ok(match spec.kind {
        AcquisitionKind::Ei | AcquisitionKind::DeupEi => expected_improvement(mean, var, best, spec.xi),
        _ => ucb(mean, var, spec.beta),
    })
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;
const REFINE_EVALS: usize = 200;
const REFINE_BRACKETS: [f64; 2] = [0.1, 0.02];

/// Coordinate-wise golden-section search around `start`, keeping a move
/// only if it improves the score.
fn refine(
    spec: &AcquisitionSpec,
    domain: &BoxDomain,
    ctx: &SurrogateContext<'_>,
    start: Vec<f64>,
    start_score: f64,
) -> Result<(Vec<f64>, f64)> {
    let d = domain.dimension();
    let per_line = (REFINE_EVALS / (REFINE_BRACKETS.len() * d)).max(4);
    let eval = |x: &[f64]| -> Result<f64> { score(spec, &InputPoint::new(x.to_vec())?, ctx) };
    let mut x = start;
    let mut fx = start_score;
    for frac in REFINE_BRACKETS {
        for j in 0..d {
            let half = frac * domain.width(j);
            let mut a = (x[j] - half).max(domain.lower()[j]);
            let mut b = (x[j] + half).min(domain.upper()[j]);
            let mut probe = x.clone();
            let at = |t: f64, probe: &mut Vec<f64>| -> Result<f64> {
                probe[j] = t;
                eval(probe)
            };
            let mut c = b - GOLDEN * (b - a);
            let mut e = a + GOLDEN * (b - a);
            let mut fc = at(c, &mut probe)?;
            let mut fe = at(e, &mut probe)?;
            for _ in 2..per_line {
                if fc >= fe {
                    b = e;
                    e = c;
                    fe = fc;
                    c = b - GOLDEN * (b - a);
                    fc = at(c, &mut probe)?;
                } else {
                    a = c;
                    c = e;
                    fc = fe;
                    e = a + GOLDEN * (b - a);
                    fe = at(e, &mut probe)?;
                }
            }
            let (t, ft) = if fc >= fe { (c, fc) } else { (e, fe) };
            if ft > fx {
                x[j] = t;
                fx = ft;
            }
        }
    }
    Ok((x, fx))
}

/// Maximizes the acquisition over `domain`.
///
/// Scores `n_candidates` uniform points, refines the `n_refine` best with
/// coordinate-wise golden-section search and returns the best point with
/// its score. `RANDOM` returns a single uniform draw.
pub fn argmax_acquisition_scored(
    spec: &AcquisitionSpec,
    domain: &BoxDomain,
    ctx: &SurrogateContext<'_>,
    rng: &mut RngStream,
) -> Result<(InputPoint, f64)> {
    spec.validate()?;
    if spec.kind == AcquisitionKind::Random {
        let x = domain.sample_point(rng);
        let s = hash_unit(&x);
        return Ok((x, s));
    }
    let candidates: Vec<Vec<f64>> = (0..spec.n_candidates).map(|_| domain.sample_uniform(rng)).collect();
    let scores = candidates
        .par_iter()
        .map(|c| score(spec, &InputPoint::new(c.clone())?, ctx))
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|a, b| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b)));
    order.truncate(spec.n_refine.max(1));
    let refined = order
        .par_iter()
        .map(|&i| refine(spec, domain, ctx, candidates[i].clone(), scores[i]))
        .collect::<Result<Vec<_>>>()?;
    let (mut best_x, best_s) = refined
        .into_iter()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .expect("at least one candidate");
    domain.clip(&mut best_x);
    Ok((InputPoint::new(best_x)?, best_s))
}

pub fn argmax_acquisition(
    spec: &AcquisitionSpec,
    domain: &BoxDomain,
    ctx: &SurrogateContext<'_>,
    rng: &mut RngStream,
) -> Result<InputPoint> {
    argmax_acquisition_scored(spec, domain, ctx, rng).map(|(x, _)| x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::gp::GpConfig;
    use proptest::prelude::*;

    #[test]
    fn ei_degenerate() {
        assert_eq!(expected_improvement(0.5, 0.0, 1.0, 0.0), 0.0);
        assert_eq!(expected_improvement(1.5, 0.0, 1.0, 0.0), 0.5);
    }

    #[test]
    fn ei_at_incumbent_with_unit_sigma() {
        let v = expected_improvement(2.0, 1.0, 2.0, 0.0);
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn ei_increases_with_sigma_below_best() {
        for mean in [-2.0, -0.5, 0.9] {
            let mut prev = expected_improvement(mean, 0.0, 1.0, 0.0);
            for k in 1..200 {
                let s = k as f64 * 0.05;
                let v = expected_improvement(mean, s * s, 1.0, 0.0);
                if prev > 0.0 {
                    assert!(v > prev, "mean {mean}, sigma {s}");
                } else {
                    assert!(v >= prev);
                }
                prev = v;
            }
        }
    }

    #[test]
    fn ucb_values() {
        assert_eq!(ucb(1.0, 4.0, 2.0), 5.0);
        assert_eq!(ucb(-3.0, 0.0, 7.0), -3.0);
    }

    #[test]
    fn kind_parsing() {
        for k in AcquisitionKind::ALL {
            assert_eq!(k.name().parse::<AcquisitionKind>().unwrap(), k);
        }
        assert!("PI".parse::<AcquisitionKind>().is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = AcquisitionSpec::new(AcquisitionKind::Ucb);
        assert!(s.validate().is_ok());
        s.beta = 0.0;
        assert!(s.validate().is_err());
        let mut s = AcquisitionSpec::new(AcquisitionKind::Ei);
        s.n_candidates = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn box_validation() {
        assert!(BoxDomain::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxDomain::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![], vec![]).is_err());
    }

    #[test]
    fn missing_context_is_an_argument_error() {
        let spec = AcquisitionSpec::new(AcquisitionKind::Ei);
        let x = InputPoint::scalar(0.0).unwrap();
        assert!(matches!(score(&spec, &x, &SurrogateContext::None), Err(DeupError::Argument(_))));
    }

    #[test]
    fn random_is_reproducible_and_inside() {
        let dom = BoxDomain::new(vec![-1.0, 2.0], vec![1.0, 3.0]).unwrap();
        let spec = AcquisitionSpec::new(AcquisitionKind::Random);
        let a = argmax_acquisition(&spec, &dom, &SurrogateContext::None, &mut RngStream::new(5, "r")).unwrap();
        let b = argmax_acquisition(&spec, &dom, &SurrogateContext::None, &mut RngStream::new(5, "r")).unwrap();
        assert_eq!(a, b);
        assert!(dom.contains(a.coords()));
    }

    fn quadratic_gp(peak: f64) -> GpPredictor {
        let xs: Vec<Vec<f64>> = (0..15).map(|i| vec![i as f64 / 14.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -(x[0] - peak).powi(2)).collect();
        let cfg = GpConfig {
            fixed_lengthscale: Some(0.5),
            fixed_signal_variance: Some(1.0),
            fixed_noise_variance: Some(1e-8),
            ..GpConfig::default()
        };
        GpPredictor::fit(&xs, &ys, &cfg, &mut RngStream::new(0, "gp")).unwrap()
    }

    #[test]
    fn finds_interior_peak_of_gp_mean() {
        let gp = quadratic_gp(0.37);
        let dom = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
        // Score only the mean: UCB with a negligible bonus.
        let spec = AcquisitionSpec { beta: 1e-9, ..AcquisitionSpec::new(AcquisitionKind::Ucb) };
        let ctx = SurrogateContext::Gp { model: &gp, best: 0.0 };
        let x = argmax_acquisition(&spec, &dom, &ctx, &mut RngStream::new(1, "acq")).unwrap();
        let grid_best = (0..10_000)
            .map(|i| i as f64 / 9_999.0)
            .max_by(|a, b| gp.predict(&[*a]).total_cmp(&gp.predict(&[*b])))
            .unwrap();
        assert!((x.coords()[0] - grid_best).abs() < 1e-2, "{} vs {}", x.coords()[0], grid_best);
    }

    #[test]
    fn ei_vanishes_at_noiseless_incumbent() {
        let xs: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| -(x[0] - 0.6).powi(2)).collect();
        let cfg = GpConfig {
            fixed_lengthscale: Some(0.2),
            fixed_signal_variance: Some(1.0),
            fixed_noise_variance: Some(0.0),
            ..GpConfig::default()
        };
        let gp = GpPredictor::fit(&xs, &ys, &cfg, &mut RngStream::new(0, "gp")).unwrap();
        let best = 0.0;
        let spec = AcquisitionSpec { xi: 0.0, ..AcquisitionSpec::new(AcquisitionKind::Ei) };
        let ctx = SurrogateContext::Gp { model: &gp, best };
        let v = score(&spec, &InputPoint::scalar(0.6).unwrap(), &ctx).unwrap();
        assert!(v <= 1e-6, "{v}");
    }

    proptest! {
        #[test]
        fn ei_nonnegative_and_shift_invariant(m in -50.0f64..50.0, v in 0.0f64..100.0, b in -50.0f64..50.0, c in -10.0f64..10.0) {
            let e = expected_improvement(m, v, b, 0.01);
            prop_assert!(e >= 0.0);
            let shifted = expected_improvement(m + c, v, b + c, 0.01);
            prop_assert!((e - shifted).abs() <= 1e-9 * (1.0 + e.abs()));
        }

        #[test]
        fn ucb_monotone_in_beta(m in -10.0f64..10.0, v in 1e-6f64..10.0, b1 in 0.01f64..5.0, db in 0.0f64..5.0) {
            prop_assert!(ucb(m, v, b1 + db) >= ucb(m, v, b1));
        }

        #[test]
        fn argmax_stays_inside_and_beats_candidates(seed in 0u64..50, peak in -0.5f64..1.5) {
            let gp = quadratic_gp(peak);
            let dom = BoxDomain::new(vec![0.0], vec![1.0]).unwrap();
            let spec = AcquisitionSpec { n_candidates: 64, ..AcquisitionSpec::new(AcquisitionKind::Ei) };
            let ctx = SurrogateContext::Gp { model: &gp, best: 0.0 };
            let (x, s) = argmax_acquisition_scored(&spec, &dom, &ctx, &mut RngStream::new(seed, "p")).unwrap();
            prop_assert!(dom.contains(x.coords()));
            let mut rng = RngStream::new(seed, "p");
            for _ in 0..64 {
                let c = InputPoint::new(dom.sample_uniform(&mut rng)).unwrap();
                prop_assert!(s >= score(&spec, &c, &ctx).unwrap());
            }
        }
    }
}
