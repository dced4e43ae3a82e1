//! Exact Gaussian-process regression.
//!
//! Targets are standardized before fitting and the prior mean is zero on the
//! standardized scale. Hyperparameters (lengthscale, signal variance, noise
//! variance) are chosen by maximizing the log marginal likelihood with a
//! multi-restart coordinate search over their logarithms.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, InputPoint};
use crate::error::{argument, DeupError, Result};
use crate::linalg::{cholesky, solve_lower, solve_upper_transposed, SquareMatrix};
use crate::rng::RngStream;

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Jitter ladder tried in order when the kernel matrix is not numerically
/// positive definite.
const JITTER_LADDER: [f64; 8] = [0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2];
/// Variances below this are treated as roundoff and clamped to zero.
const VARIANCE_ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kernel {
    Rbf,
    Matern52,
}

impl Kernel {
    /// Unit-amplitude correlation at squared distance `r2`.
    #[inline]
    pub fn correlation(self, r2: f64, lengthscale: f64) -> f64 {
        match self {
            Kernel::Rbf => (-0.5 * r2 / (lengthscale * lengthscale)).exp(),
            Kernel::Matern52 => {
                let s = (5.0 * r2).sqrt() / lengthscale;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = DeupError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rbf" => Ok(Kernel::Rbf),
            "matern52" | "matern" => Ok(Kernel::Matern52),
            other => Err(argument(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Fitting options. `fixed_*` fields pin a hyperparameter instead of
/// searching it; all values refer to the standardized target scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub kernel: Kernel,
    pub restarts: usize,
    pub max_evals_per_restart: usize,
    pub noise_floor: f64,
    pub noise_ceiling: f64,
    pub fixed_lengthscale: Option<f64>,
    pub fixed_signal_variance: Option<f64>,
    pub fixed_noise_variance: Option<f64>,
    /// Smallest jitter the ladder may start from (raised on mid-run retries).
    pub min_jitter: f64,
    /// Rescale each input dimension to [0, 1] using the training min/max, so
    /// one isotropic lengthscale can serve features with different units.
    #[serde(default)]
    pub normalize_inputs: bool,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Rbf,
            restarts: 8,
            max_evals_per_restart: 150,
            noise_floor: 1e-6,
            noise_ceiling: 1.0,
            fixed_lengthscale: None,
            fixed_signal_variance: None,
            fixed_noise_variance: None,
            min_jitter: 0.0,
            normalize_inputs: false,
        }
    }
}

impl GpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(argument("gp restarts must be >= 1"));
        }
        if !(self.noise_floor > 0.0 && self.noise_ceiling >= self.noise_floor) {
            return Err(argument("gp noise bounds must satisfy 0 < floor <= ceiling"));
        }
        for (name, v) in [
            ("lengthscale", self.fixed_lengthscale),
            ("signal_variance", self.fixed_signal_variance),
        ] {
            if matches!(v, Some(x) if !(x > 0.0)) {
                return Err(argument(format!("fixed {name} must be positive")));
            }
        }
        if matches!(self.fixed_noise_variance, Some(x) if !(x >= 0.0)) {
            return Err(argument("fixed noise variance must be nonnegative"));
        }
        Ok(())
    }
}

/// Log-space hyperparameters on the standardized scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogHyper {
    pub log_lengthscale: f64,
    pub log_signal: f64,
    pub log_noise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpPredictor {
    kernel: Kernel,
    lengthscale: f64,
    /// Standardized-scale signal variance.
    signal: f64,
    /// Standardized-scale noise variance (excluding jitter).
    noise: f64,
    jitter: f64,
    y_mean: f64,
    y_scale: f64,
    training_inputs: Vec<Vec<f64>>,
    /// Per-dimension (min, range) of the raw inputs; empty when not normalizing.
    #[serde(default)]
    input_transform: Vec<(f64, f64)>,
    /// Training inputs after the transform.
    #[serde(default)]
    scaled_inputs: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    chol_factor: SquareMatrix,
    log_marginal_likelihood: f64,
}

struct Problem<'a> {
    xs: &'a [Vec<f64>],
    ys: Vec<f64>,
    sq_dists: SquareMatrix,
    kernel: Kernel,
    min_jitter: f64,
}

struct Factored {
    chol: SquareMatrix,
    alpha: Vec<f64>,
    jitter: f64,
    lml: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl Problem<'_> {
    fn factor(&self, lengthscale: f64, signal: f64, noise: f64) -> Option<Factored> {
        let n = self.xs.len();
        let base = SquareMatrix::from_fn(n, |i, j| {
            let k = signal * self.kernel.correlation(self.sq_dists.get(i, j), lengthscale);
            if i == j {
                k + noise
            } else {
                k
            }
        });
        let mut ladder: Vec<f64> =
            JITTER_LADDER.iter().copied().filter(|&j| j >= self.min_jitter).collect();
        if ladder.is_empty() {
            ladder.push(self.min_jitter);
        }
        for jitter in ladder {
            let mut k = base.clone();
            k.add_diagonal(jitter);
            if let Some(chol) = cholesky(&k) {
                let alpha = solve_upper_transposed(&chol, &solve_lower(&chol, &self.ys));
                let fit: f64 = self.ys.iter().zip(&alpha).map(|(y, a)| y * a).sum();
                let log_det: f64 = (0..n).map(|i| chol.get(i, i).ln()).sum();
                let lml = -0.5 * fit - log_det - 0.5 * n as f64 * LN_2PI;
                if lml.is_finite() {
                    return Some(Factored { chol, alpha, jitter, lml });
                }
            }
        }
        None
    }

    fn lml(&self, h: &LogHyper) -> f64 {
        self.factor(h.log_lengthscale.exp(), h.log_signal.exp(), h.log_noise.exp())
            .map_or(f64::NEG_INFINITY, |f| f.lml)
    }
}

/// Search box over log-hyperparameters; a degenerate interval means fixed.
#[derive(Debug, Clone, Copy)]
struct Bounds {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Bounds {
    fn new(cfg: &GpConfig, input_range: f64) -> Self {
        let pin = |fixed: Option<f64>, lo: f64, hi: f64| match fixed {
            Some(v) => (v.ln(), v.ln()),
            None => (lo, hi),
        };
        let l = pin(
            cfg.fixed_lengthscale,
            (1e-2 * input_range).ln(),
            (1e2 * input_range).ln(),
        );
        let s = pin(cfg.fixed_signal_variance, 0.05f64.ln(), 20f64.ln());
        let n = match cfg.fixed_noise_variance {
            // ln(0) is -inf; the factorization handles zero noise through jitter.
            Some(v) if v == 0.0 => (f64::NEG_INFINITY, f64::NEG_INFINITY),
            other => pin(other, cfg.noise_floor.ln(), cfg.noise_ceiling.ln()),
        };
        Self { lo: [l.0, s.0, n.0], hi: [l.1, s.1, n.1] }
    }

    fn free(&self, c: usize) -> bool {
        self.hi[c] > self.lo[c]
    }

    fn clamp(&self, c: usize, v: f64) -> f64 {
        if self.free(c) {
            v.clamp(self.lo[c], self.hi[c])
        } else {
            self.lo[c]
        }
    }
}

fn from_array(a: [f64; 3]) -> LogHyper {
    LogHyper { log_lengthscale: a[0], log_signal: a[1], log_noise: a[2] }
}

/// Result of the hyperparameter search: the winner plus, for every restart,
/// the sequence of accepted log marginal likelihood values.
#[derive(Debug, Clone)]
pub struct HyperSearch {
    pub best: LogHyper,
    pub best_lml: f64,
    pub accepted: Vec<Vec<f64>>,
}

fn coordinate_search(
    problem: &Problem<'_>,
    bounds: &Bounds,
    start: [f64; 3],
    max_evals: usize,
) -> (LogHyper, f64, Vec<f64>) {
    let mut theta = start;
    for c in 0..3 {
        theta[c] = bounds.clamp(c, theta[c]);
    }
    let mut best = problem.lml(&from_array(theta));
    let mut accepted = vec![best];
    let mut evals = 1;
    let mut step = 1.0;
    while step >= 1e-2 && evals < max_evals {
        let mut improved = false;
        for c in (0..3).filter(|&c| bounds.free(c)) {
            for dir in [1.0, -1.0] {
                let mut trial = theta;
                trial[c] = bounds.clamp(c, theta[c] + dir * step);
                if trial[c] == theta[c] {
                    continue;
                }
                let v = problem.lml(&from_array(trial));
                evals += 1;
                if v > best {
                    best = v;
                    theta = trial;
                    accepted.push(v);
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (from_array(theta), best, accepted)
}

fn input_range(xs: &[Vec<f64>]) -> f64 {
    let d = xs[0].len();
    let range = (0..d)
        .map(|j| {
            let (lo, hi) = xs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x[j]), hi.max(x[j])));
            hi - lo
        })
        .fold(0.0, f64::max);
    if range > 0.0 {
        range
    } else {
        1.0
    }
}

fn unit_transform(xs: &[Vec<f64>]) -> Vec<(f64, f64)> {
    (0..xs[0].len())
        .map(|j| {
            let (lo, hi) = xs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x[j]), hi.max(x[j])));
            (lo, if hi > lo { hi - lo } else { 1.0 })
        })
        .collect()
}

fn apply_transform(t: &[(f64, f64)], x: &[f64]) -> Vec<f64> {
    x.iter().zip(t).map(|(v, (lo, w))| (v - lo) / w).collect()
}

fn standardize(ys: &[f64]) -> (f64, f64, Vec<f64>) {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    let scale = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    (mean, scale, ys.iter().map(|y| (y - mean) / scale).collect())
}

fn check_inputs(xs: &[Vec<f64>], ys: &[f64]) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(argument(format!("{} inputs but {} targets", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(argument(format!("gp fit needs at least 2 examples, got {}", xs.len())));
    }
    let d = xs[0].len();
    if d == 0 || xs.iter().any(|x| x.len() != d) {
        return Err(argument("gp inputs must share one nonzero dimension"));
    }
    if xs.iter().flatten().chain(ys).any(|v| !v.is_finite()) {
        return Err(argument("gp inputs and targets must be finite"));
    }
    Ok(())
}

/// Runs the restart search and returns its full history.
pub fn optimize_hyperparameters(
    xs: &[Vec<f64>],
    ys: &[f64],
    cfg: &GpConfig,
    rng: &mut RngStream,
) -> Result<HyperSearch> {
    check_inputs(xs, ys)?;
    cfg.validate()?;
    let (_, _, ys_std) = standardize(ys);
    let scaled: Vec<Vec<f64>> = if cfg.normalize_inputs {
        let t = unit_transform(xs);
        xs.iter().map(|x| apply_transform(&t, x)).collect()
    } else {
        xs.to_vec()
    };
    let problem = Problem::new(&scaled, ys_std, cfg);
    Ok(search(&problem, cfg, input_range(&scaled), rng))
}

impl<'a> Problem<'a> {
    fn new(xs: &'a [Vec<f64>], ys: Vec<f64>, cfg: &GpConfig) -> Self {
        let n = xs.len();
        let sq_dists = SquareMatrix::from_fn(n, |i, j| sq_dist(&xs[i], &xs[j]));
        Self { xs, ys, sq_dists, kernel: cfg.kernel, min_jitter: cfg.min_jitter }
    }
}

fn search(problem: &Problem<'_>, cfg: &GpConfig, range: f64, rng: &mut RngStream) -> HyperSearch {
    let bounds = Bounds::new(cfg, range);
    let mut accepted = Vec::with_capacity(cfg.restarts);
    let mut best: Option<(LogHyper, f64)> = None;
    for r in 0..cfg.restarts {
        let start = if r == 0 {
            [(0.2 * range).ln(), 0.0, 1e-4f64.ln()]
        } else {
            let mut s = [0.0; 3];
            for c in 0..3 {
                s[c] = if bounds.free(c) { rng.gen_range(bounds.lo[c]..bounds.hi[c]) } else { bounds.lo[c] };
            }
            s
        };
        let (h, v, trace) = coordinate_search(problem, &bounds, start, cfg.max_evals_per_restart);
        accepted.push(trace);
        if best.as_ref().map_or(true, |(_, b)| v > *b) {
            best = Some((h, v));
        }
        // Nothing left to search once every coordinate is pinned.
        if (0..3).all(|c| !bounds.free(c)) {
            break;
        }
    }
    let (best, best_lml) = best.expect("at least one restart");
    HyperSearch { best, best_lml, accepted }
}

impl GpPredictor {
    /// Fits on raw input rows and targets.
    pub fn fit(xs: &[Vec<f64>], ys: &[f64], cfg: &GpConfig, rng: &mut RngStream) -> Result<Self> {
        check_inputs(xs, ys)?;
        cfg.validate()?;
        let (y_mean, y_scale, ys_std) = standardize(ys);
        let input_transform = if cfg.normalize_inputs { unit_transform(xs) } else { Vec::new() };
        let scaled: Vec<Vec<f64>> = if input_transform.is_empty() {
            xs.to_vec()
        } else {
            xs.iter().map(|x| apply_transform(&input_transform, x)).collect()
        };
        let problem = Problem::new(&scaled, ys_std, cfg);
        let found = search(&problem, cfg, input_range(&scaled), rng);
        let h = found.best;
        let (lengthscale, signal) = (h.log_lengthscale.exp(), h.log_signal.exp());
        let noise = h.log_noise.exp();
        let f = problem.factor(lengthscale, signal, noise).ok_or_else(|| {
            DeupError::Numeric(format!(
                "cholesky failed for {} points even with jitter {:e}",
                xs.len(),
                JITTER_LADDER[JITTER_LADDER.len() - 1]
            ))
        })?;
        Ok(Self {
            kernel: cfg.kernel,
            lengthscale,
            signal,
            noise,
            jitter: f.jitter,
            y_mean,
            y_scale,
            training_inputs: xs.to_vec(),
            input_transform,
            scaled_inputs: scaled,
            alpha: f.alpha,
            chol_factor: f.chol,
            log_marginal_likelihood: f.lml,
        })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Lengthscale in the (possibly normalized) input units used by the kernel.
    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    /// Signal variance in target units.
    pub fn signal_variance(&self) -> f64 {
        self.signal * self.y_scale * self.y_scale
    }

    /// Noise variance in target units.
    pub fn noise_variance(&self) -> f64 {
        self.noise * self.y_scale * self.y_scale
    }

    /// Diagonal jitter that was needed for a successful factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn target_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn target_scale(&self) -> f64 {
        self.y_scale
    }

    pub fn training_inputs(&self) -> &[Vec<f64>] {
        &self.training_inputs
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    pub fn dimension(&self) -> usize {
        self.training_inputs[0].len()
    }

    /// Posterior predictive mean and variance (noise included) at `x`.
    pub fn posterior(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dimension() {
            return Err(argument(format!(
                "query has dimension {} but model was trained on dimension {}",
                x.len(),
                self.dimension()
            )));
        }
        Ok(self.posterior_unchecked(x))
    }

    pub(crate) fn posterior_unchecked(&self, x: &[f64]) -> (f64, f64) {
        let scaled;
        let (train, x) = if self.input_transform.is_empty() {
            (&self.training_inputs, x)
        } else {
            scaled = apply_transform(&self.input_transform, x);
            (&self.scaled_inputs, scaled.as_slice())
        };
        let k: Vec<f64> = train
            .iter()
            .map(|t| self.signal * self.kernel.correlation(sq_dist(t, x), self.lengthscale))
            .collect();
        let mean_std: f64 = k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let v = solve_lower(&self.chol_factor, &k);
        let prior = self.signal + self.noise;
        let mut var_std = prior - v.iter().map(|a| a * a).sum::<f64>();
        if var_std < VARIANCE_ROUNDOFF {
            var_std = var_std.max(0.0);
        }
        let var_std = var_std.clamp(0.0, prior);
        let s2 = self.y_scale * self.y_scale;
        (mean_std * self.y_scale + self.y_mean, var_std * s2)
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.posterior_unchecked(x).0
    }
}

/// Fits a GP on a dataset.
pub fn gp_fit(d: &Dataset, cfg: &GpConfig, rng: &mut RngStream) -> Result<GpPredictor> {
    GpPredictor::fit(&d.inputs(), &d.targets(), cfg, rng)
}

/// Posterior mean and variance at an input point.
pub fn gp_posterior(g: &GpPredictor, x: &InputPoint) -> Result<(f64, f64)> {
    g.posterior(x.coords())
}
