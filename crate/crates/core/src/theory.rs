//! Numerical checks of the loss decompositions behind the uncertainty model.
//!
//! Under squared loss with Gaussian noise the expected loss of a predictor
//! splits into noise variance plus squared bias. Under log loss with Gaussian
//! densities it splits into the entropy of the truth plus a KL divergence, and
//! that KL in turn splits into a mean-shift term and a width-mismatch term.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::benchmarks::{NoiseProfile, Oracle};
use crate::data::InputPoint;
use crate::error::{argument, Result};
use crate::rng::RngStream;
use crate::stats::{mean, standard_error};

/// Truth `P = N(p_mean, p_std²)` and prediction `Q = N(q_mean, q_std²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianPair {
    pub p_mean: f64,
    pub p_std: f64,
    pub q_mean: f64,
    pub q_std: f64,
}

impl GaussianPair {
    pub fn new(p_mean: f64, p_std: f64, q_mean: f64, q_std: f64) -> Result<Self> {
        if ![p_mean, p_std, q_mean, q_std].iter().all(|v| v.is_finite()) {
            return Err(argument("gaussian pair entries must be finite"));
        }
        if !(p_std > 0.0 && q_std > 0.0) {
            return Err(argument(format!("stds must be positive, got {p_std} and {q_std}")));
        }
        Ok(Self { p_mean, p_std, q_mean, q_std })
    }

    /// Q moved onto the mean of P, keeping its width.
    pub fn shifted(&self) -> Self {
        Self { q_mean: self.p_mean, ..*self }
    }

    /// Random pair with means in `[-mean_range, mean_range]` and stds
    /// log-uniform in `[std_lo, std_hi]`.
    pub fn random(rng: &mut impl Rng, mean_range: f64, std_lo: f64, std_hi: f64) -> Self {
        let mut std = || (rng.gen_range(std_lo.ln()..=std_hi.ln())).exp();
        let (p_std, q_std) = (std(), std());
        Self {
            p_mean: rng.gen_range(-mean_range..=mean_range),
            p_std,
            q_mean: rng.gen_range(-mean_range..=mean_range),
            q_std,
        }
    }
}

/// Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl McEstimate {
    fn from_samples(xs: &[f64]) -> Self {
        Self { mean: mean(xs), se: standard_error(xs), n: xs.len() }
    }

    /// `|mean - target| <= k * se`; a zero SE demands near-equality.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se + 1e-12 * target.abs().max(1.0)
    }
}

const MIN_TOTAL_SAMPLES: usize = 1_000;
const MIN_NLL_SAMPLES: usize = 10_000;

/// Expected squared loss of the prediction `f_hat` at `x`, estimated from `n`
/// oracle draws.
pub fn mc_total_uncertainty(
    f_hat: f64,
    oracle: &Oracle,
    x: &InputPoint,
    n: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    if n < MIN_TOTAL_SAMPLES {
        return Err(argument(format!("need at least {MIN_TOTAL_SAMPLES} draws, got {n}")));
    }
    let losses: Vec<f64> = oracle.sample(x, rng, n)?.into_iter().map(|y| (f_hat - y).powi(2)).collect();
    Ok(McEstimate::from_samples(&losses))
}

/// KL(P || Q) for two univariate Gaussians.
pub fn gaussian_kl(pair: &GaussianPair) -> f64 {
    let d = pair.q_mean - pair.p_mean;
    let kl = (pair.q_std / pair.p_std).ln() + (pair.p_std.powi(2) + d * d) / (2.0 * pair.q_std.powi(2)) - 0.5;
    kl.max(0.0)
}

/// KL(P || Q) minus the sum of the mean-shift term `(Δμ)² / (2 σ_Q²)` and
/// the KL to Q moved onto P's mean. Zero up to roundoff.
pub fn kl_shift_residual(pair: &GaussianPair) -> f64 {
    let d = pair.q_mean - pair.p_mean;
    let shift = d * d / (2.0 * pair.q_std.powi(2));
    gaussian_kl(pair) - (shift + gaussian_kl(&pair.shifted()))
}

/// Entropy of `N(·, std²)` in nats.
pub fn gaussian_entropy(std: f64) -> f64 {
    0.5 * (2.0 * PI * std::f64::consts::E * std * std).ln()
}

fn gaussian_nll(y: f64, m: f64, s: f64) -> f64 {
    0.5 * (2.0 * PI * s * s).ln() + (y - m).powi(2) / (2.0 * s * s)
}

/// Log-loss split: total = cross-entropy of Q under P, aleatoric = entropy
/// of P, epistemic = their difference, compared with the closed-form KL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NllReport {
    pub pair: GaussianPair,
    pub total: McEstimate,
    pub aleatoric: f64,
    pub epistemic: f64,
    pub kl: f64,
    /// `epistemic - kl`.
    pub gap: f64,
}

impl NllReport {
    pub fn passes(&self) -> bool {
        self.gap.abs() <= 3.0 * self.total.se + 1e-12
    }
}

pub fn check_nll_decomposition(pair: &GaussianPair, n: usize, rng: &mut RngStream) -> Result<NllReport> {
    if n < MIN_NLL_SAMPLES {
        return Err(argument(format!("need at least {MIN_NLL_SAMPLES} draws, got {n}")));
    }
    let nll: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            gaussian_nll(pair.p_mean + pair.p_std * z, pair.q_mean, pair.q_std)
        })
        .collect();
    let total = McEstimate::from_samples(&nll);
    let aleatoric = gaussian_entropy(pair.p_std);
    let epistemic = total.mean - aleatoric;
    let kl = gaussian_kl(pair);
    Ok(NllReport { pair: *pair, total, aleatoric, epistemic, kl, gap: epistemic - kl })
}

/// Squared-loss split at one point: total ≈ σ² + (f̂ − f*)².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SquaredLossReport {
    pub f_star: f64,
    pub sigma: f64,
    pub f_hat: f64,
    pub total: McEstimate,
    pub aleatoric: f64,
    /// Monte-Carlo total minus the noise variance.
    pub epistemic_mc: f64,
    /// `(f̂ − f*)²`.
    pub epistemic_exact: f64,
}

impl SquaredLossReport {
    /// Both sides of the identity agree within 3 standard errors.
    pub fn identity_holds(&self) -> bool {
        self.total.agrees_with(self.aleatoric + self.epistemic_exact, 3.0)
    }

    /// The noise variance does not exceed the estimated total.
    pub fn aleatoric_bounded(&self) -> bool {
        self.aleatoric <= self.total.mean + 3.0 * self.total.se + 1e-12
    }
}

/// Estimates the squared-loss split for `f_hat` at `x` on an oracle with
/// constant noise `sigma`.
pub fn check_squared_loss(
    oracle: &Oracle,
    x: &InputPoint,
    sigma: f64,
    f_hat: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<SquaredLossReport> {
    let oracle = oracle.clone().with_noise(NoiseProfile::Constant(sigma))?;
    let total = mc_total_uncertainty(f_hat, &oracle, x, n, rng)?;
    let f_star = oracle.value(x.coords());
    let aleatoric = sigma * sigma;
    Ok(SquaredLossReport {
        f_star,
        sigma,
        f_hat,
        total,
        aleatoric,
        epistemic_mc: total.mean - aleatoric,
        epistemic_exact: (f_hat - f_star).powi(2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryRow {
    pub name: String,
    pub detail: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheorySuite {
    pub rows: Vec<TheoryRow>,
}

impl TheorySuite {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn table(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
        self.rows
            .iter()
            .map(|r| format!("{:<width$}  {}  {}\n", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail))
            .collect()
    }
}

/// Sizes of the standard suite.
#[derive(Debug, Clone, Copy)]
pub struct SuiteSize {
    pub kl_pairs: usize,
    pub squared_configs: usize,
    pub squared_draws: usize,
    pub nll_pairs: usize,
    pub nll_draws: usize,
}

impl Default for SuiteSize {
    fn default() -> Self {
        Self { kl_pairs: 10_000, squared_configs: 50, squared_draws: 100_000, nll_pairs: 20, nll_draws: 100_000 }
    }
}

pub const KL_RESIDUAL_TOL: f64 = 1e-10;

pub fn run_theory_suite(seed: u64, size: SuiteSize) -> Result<TheorySuite> {
    let root = RngStream::new(seed, "theory");
    let mut rows = Vec::new();

    let mut rng = root.substream("kl-pairs");
    let pairs: Vec<GaussianPair> = (0..size.kl_pairs).map(|_| GaussianPair::random(&mut rng, 5.0, 0.1, 10.0)).collect();
    let worst = pairs.iter().map(|p| kl_shift_residual(p).abs()).fold(0.0, f64::max);
    rows.push(TheoryRow {
        name: "kl_shift_residual".into(),
        detail: format!("max |residual| {worst:.3e} over {} pairs (tol {KL_RESIDUAL_TOL:e})", pairs.len()),
        passed: worst <= KL_RESIDUAL_TOL,
    });
    let negative = pairs.iter().filter(|p| gaussian_kl(p) < 0.0).count();
    rows.push(TheoryRow {
        name: "kl_nonnegative".into(),
        detail: format!("{negative} negative of {}", pairs.len()),
        passed: negative == 0,
    });

    let oracle = Oracle::synth1d();
    let mut rng = root.substream("squared-configs");
    let mut reports = Vec::with_capacity(size.squared_configs);
    for i in 0..size.squared_configs {
        let x = oracle.domain().sample_point(&mut rng);
        let sigma = rng.gen_range(0.0..2.0);
        let f_hat = oracle.value(x.coords()) + rng.gen_range(-2.0..2.0);
        reports.push(check_squared_loss(&oracle, &x, sigma, f_hat, size.squared_draws, &mut root.substream(format!("draws-{i}")))?);
    }
    let z_max = reports
        .iter()
        .map(|r| (r.total.mean - r.aleatoric - r.epistemic_exact).abs() / r.total.se.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let held = reports.iter().filter(|r| r.identity_holds()).count();
    rows.push(TheoryRow {
        name: "squared_loss_split".into(),
        detail: format!("{held}/{} configs within 3 SE (max |z| {z_max:.2})", reports.len()),
        passed: held == reports.len(),
    });
    let bounded = reports.iter().filter(|r| r.aleatoric_bounded()).count();
    rows.push(TheoryRow {
        name: "aleatoric_below_total".into(),
        detail: format!("{bounded}/{} configs", reports.len()),
        passed: bounded == reports.len(),
    });

    let mut rng = root.substream("nll-pairs");
    let mut ok = 0;
    let mut worst_gap = 0.0f64;
    for i in 0..size.nll_pairs {
        let pair = GaussianPair::random(&mut rng, 2.0, 0.3, 3.0);
        let r = check_nll_decomposition(&pair, size.nll_draws, &mut root.substream(format!("nll-{i}")))?;
        worst_gap = worst_gap.max(r.gap.abs() / r.total.se.max(f64::MIN_POSITIVE));
        ok += usize::from(r.passes());
    }
    rows.push(TheoryRow {
        name: "nll_split".into(),
        detail: format!("{ok}/{} pairs within 3 SE (max |z| {worst_gap:.2})", size.nll_pairs),
        passed: ok == size.nll_pairs,
    });
    Ok(TheorySuite { rows })
}
