//! Experiment configuration: a flat `key = value` text format with sections.
//!
//! ```text
//! [oracle]
//! name = ackley
//! dimension = 5
//!
//! [smo]
//! n_init = 20
//! budget = 120
//! acquisition = DEUP_EI
//! seed = 3
//!
//! [deup]
//! features = LOG_VARIANCE
//! ```
//!
//! Lines starting with `#` are comments. Unknown sections or keys are schema
//! errors; values are validated after parsing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionKind, AcquisitionSpec, BoxDomain};
use crate::benchmarks::{NoiseProfile, Oracle};
use crate::deup::{AleatoricMode, FeatureLayout, VarianceSource};
use crate::error::{DeupError, Result};
use crate::models::{GpConfig, Kernel, LearnerKind, MlpConfig};

/// Which learner fits the error predictor `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorModelChoice {
    /// GP unless raw inputs are among the features, then MLP.
    Auto,
    Gp,
    Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarianceChoice {
    Main,
    Ensemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub oracle_name: String,
    pub dimension: usize,
    pub noise: NoiseProfile,
    pub domain: Option<BoxDomain>,
    pub n_init: usize,
    pub budget: usize,
    pub acquisition: AcquisitionSpec,
    pub seed: u64,
    pub feature_set: FeatureLayout,
    pub aleatoric_mode: AleatoricMode,
    /// Oracle queries per initial point in `REPLICATES` mode.
    pub replicates: usize,
    pub pretrain: bool,
    /// Rows to pre-fill `D_u` with; four per initial example when `None`.
    pub n_pretrain: Option<usize>,
    pub cv_folds: usize,
    pub error_model: ErrorModelChoice,
    /// Main predictor of the DEUP modes.
    pub main_model: LearnerKind,
    /// Restarts of the error-predictor GP hyperparameter search.
    pub error_gp_restarts: usize,
    pub variance_source: VarianceChoice,
    pub ensemble_members: usize,
    pub gp: GpConfig,
    pub mlp: MlpConfig,
    pub kde_bandwidth: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            oracle_name: "ackley".into(),
            dimension: 10,
            noise: NoiseProfile::Zero,
            domain: None,
            n_init: 20,
            budget: 120,
            acquisition: AcquisitionSpec::new(AcquisitionKind::DeupEi),
            seed: 0,
            feature_set: FeatureLayout::variance_only(),
            aleatoric_mode: AleatoricMode::Zero,
            replicates: 1,
            pretrain: true,
            n_pretrain: None,
            cv_folds: 2,
            error_model: ErrorModelChoice::Auto,
            main_model: LearnerKind::Gp,
            error_gp_restarts: 8,
            variance_source: VarianceChoice::Main,
            ensemble_members: 5,
            gp: GpConfig::default(),
            mlp: MlpConfig::default(),
            kde_bandwidth: None,
        }
    }
}

impl ExperimentConfig {
    /// Default configuration for a registered oracle at its natural dimension.
    pub fn for_oracle(name: &str, dimension: usize) -> Result<Self> {
        let oracle = Oracle::by_name(name, dimension)?;
        Ok(Self { oracle_name: oracle.name().to_string(), dimension, ..Self::default() })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(DeupError::Validation(m));
        if self.n_init < 2 {
            return fail(format!("n_init must be >= 2, got {}", self.n_init));
        }
        if self.budget < self.n_init {
            return fail(format!("budget ({}) must be >= n_init ({})", self.budget, self.n_init));
        }
        if self.acquisition.kind.uses_deup() && self.feature_set.is_empty() {
            return fail(format!("feature_set must be nonempty for {}", self.acquisition.kind));
        }
        self.acquisition.validate()?;
        self.gp.validate()?;
        self.noise.validate()?;
        if self.aleatoric_mode == AleatoricMode::Replicates {
            if self.replicates < 2 {
                return fail("REPLICATES mode needs replicates >= 2".into());
            }
            if self.n_init % self.replicates != 0 {
                return fail(format!("n_init ({}) must be a multiple of replicates ({})", self.n_init, self.replicates));
            }
        }
        if self.cv_folds < 2 || self.cv_folds > self.n_init {
            return fail(format!("cv_folds must lie in [2, n_init], got {}", self.cv_folds));
        }
        if self.error_gp_restarts == 0 {
            return fail("error_gp_restarts must be >= 1".into());
        }
        if self.variance_source == VarianceChoice::Ensemble && self.ensemble_members < 2 {
            return fail("ensemble_members must be >= 2".into());
        }
        if matches!(self.kde_bandwidth, Some(h) if !(h > 0.0)) {
            return fail("kde bandwidth must be positive".into());
        }
        self.oracle()?;
        Ok(())
    }

    /// The configured oracle with noise profile and domain applied.
    pub fn oracle(&self) -> Result<Oracle> {
        let mut o = Oracle::by_name(&self.oracle_name, self.dimension)?.with_noise(self.noise.clone())?;
        if let Some(d) = &self.domain {
            o = o.with_domain(d.clone())?;
        }
        Ok(o)
    }

    pub fn variance_source(&self) -> VarianceSource {
        match self.variance_source {
            VarianceChoice::Main => VarianceSource::MainModel,
            VarianceChoice::Ensemble => VarianceSource::Ensemble { mlp: self.mlp.clone(), members: self.ensemble_members },
        }
    }

    /// Renders the configuration in the file format accepted by [`parse_config`].
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| x.to_string());
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        s += "[oracle]\n";
        s += &format!("name = {}\ndimension = {}\n", self.oracle_name, self.dimension);
        match &self.noise {
            NoiseProfile::Zero => s += "noise = zero\n",
            NoiseProfile::Constant(sd) => s += &format!("noise = constant\nnoise_std = {sd}\n"),
            NoiseProfile::Hetero { base, amplitude, frequency } => {
                s += &format!("noise = hetero\nnoise_std = {base}\nnoise_amplitude = {amplitude}\nnoise_frequency = {frequency}\n")
            }
        }
        if let Some(d) = &self.domain {
            s += &format!("lower = {}\nupper = {}\n", join(d.lower()), join(d.upper()));
        }
        let a = &self.acquisition;
        s += "\n[smo]\n";
        s += &format!(
            "n_init = {}\nbudget = {}\nacquisition = {}\nseed = {}\nbeta = {}\nxi = {}\nn_candidates = {}\nn_refine = {}\n",
            self.n_init, self.budget, a.kind, self.seed, a.beta, a.xi, a.n_candidates, a.n_refine
        );
        s += "\n[deup]\n";
        s += &format!(
            "features = {}\naleatoric_mode = {}\nreplicates = {}\npretrain = {}\nn_pretrain = {}\ncv_folds = {}\nerror_model = {}\nmain_model = {}\nerror_gp_restarts = {}\nvariance_source = {}\nensemble_members = {}\n",
            self.feature_set,
            match self.aleatoric_mode {
                AleatoricMode::Zero => "ZERO",
                AleatoricMode::Known => "KNOWN",
                AleatoricMode::Replicates => "REPLICATES",
            },
            self.replicates,
            self.pretrain,
            self.n_pretrain.map_or_else(|| "auto".to_string(), |n| n.to_string()),
            self.cv_folds,
            match self.error_model {
                ErrorModelChoice::Auto => "auto",
                ErrorModelChoice::Gp => "gp",
                ErrorModelChoice::Mlp => "mlp",
            },
            match self.main_model {
                LearnerKind::Gp => "gp",
                LearnerKind::Mlp => "mlp",
            },
            self.error_gp_restarts,
            match self.variance_source {
                VarianceChoice::Main => "main",
                VarianceChoice::Ensemble => "ensemble",
            },
            self.ensemble_members,
        );
        let g = &self.gp;
        s += "\n[gp]\n";
        s += &format!(
            "kernel = {}\nrestarts = {}\nmax_evals_per_restart = {}\nnoise_floor = {}\nnoise_ceiling = {}\nlengthscale = {}\nsignal_variance = {}\nnoise_variance = {}\nmin_jitter = {}\nnormalize_inputs = {}\n",
            match g.kernel {
                Kernel::Rbf => "rbf",
                Kernel::Matern52 => "matern52",
            },
            g.restarts,
            g.max_evals_per_restart,
            g.noise_floor,
            g.noise_ceiling,
            opt(g.fixed_lengthscale),
            opt(g.fixed_signal_variance),
            opt(g.fixed_noise_variance),
            g.min_jitter,
            g.normalize_inputs,
        );
        let m = &self.mlp;
        s += "\n[mlp]\n";
        s += &format!(
            "hidden = {}\nepochs = {}\nlearning_rate = {}\nbeta1 = {}\nbeta2 = {}\nepsilon = {}\nbatch_size = {}\n",
            m.hidden.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(","),
            m.epochs,
            m.learning_rate,
            m.beta1,
            m.beta2,
            m.epsilon,
            m.batch_size,
        );
        s += "\n[kde]\n";
        s += &format!("bandwidth = {}\n", opt(self.kde_bandwidth));
        s
    }
}

struct Entry<'a> {
    section: &'a str,
    key: &'a str,
    value: &'a str,
    line: usize,
}

impl Entry<'_> {
    fn err(&self, message: impl Into<String>) -> DeupError {
        DeupError::Schema { key: format!("{}.{}", self.section, self.key), line: self.line, message: message.into() }
    }

    fn parse<T: std::str::FromStr>(&self, what: &str) -> Result<T> {
        self.value.parse().map_err(|_| self.err(format!("expected {what}, got `{}`", self.value)))
    }

    fn real(&self) -> Result<f64> {
        let v: f64 = self.parse("a real number")?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err("value must be finite"))
        }
    }

    fn real_or_auto(&self) -> Result<Option<f64>> {
        if self.value.eq_ignore_ascii_case("auto") {
            Ok(None)
        } else {
            self.real().map(Some)
        }
    }

    fn boolean(&self) -> Result<bool> {
        match self.value {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.err(format!("expected true or false, got `{}`", self.value))),
        }
    }

    fn reals(&self) -> Result<Vec<f64>> {
        self.value
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| self.err(format!("bad vector element `{}`", t.trim()))))
            .collect()
    }

    fn via<T, E>(&self, r: std::result::Result<T, E>) -> Result<T>
    where
        E: std::fmt::Display,
    {
        r.map_err(|e| self.err(e.to_string()))
    }
}

/// Parses configuration text; unspecified fields keep their defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut section = String::new();
    let mut noise_kind = String::from("zero");
    let (mut noise_std, mut noise_amp, mut noise_freq) = (0.0, 0.0, 1.0);
    let (mut lower, mut upper): (Option<Vec<f64>>, Option<Vec<f64>>) = (None, None);
    let mut dimension_given = false;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| DeupError::Schema {
                key: trimmed.into(),
                line,
                message: "unterminated section header".into(),
            })?;
            if !["oracle", "smo", "deup", "gp", "mlp", "kde"].contains(&name) {
                return Err(DeupError::Schema { key: name.into(), line, message: "unknown section".into() });
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| DeupError::Schema {
            key: trimmed.into(),
            line,
            message: "expected `key = value`".into(),
        })?;
        let value = value.split(" #").next().unwrap_or("").trim();
        let e = Entry { section: &section, key: key.trim(), value, line };
        if section.is_empty() {
            return Err(e.err("key outside of any section"));
        }
        let a = &mut cfg.acquisition;
        match (e.section, e.key) {
            ("oracle", "name") => cfg.oracle_name = e.value.to_ascii_lowercase(),
            ("oracle", "dimension") => {
                cfg.dimension = e.parse("an integer")?;
                dimension_given = true;
            }
            ("oracle", "noise") => noise_kind = e.value.to_ascii_lowercase(),
            ("oracle", "noise_std") => noise_std = e.real()?,
            ("oracle", "noise_amplitude") => noise_amp = e.real()?,
            ("oracle", "noise_frequency") => noise_freq = e.real()?,
            ("oracle", "lower") => lower = Some(e.reals()?),
            ("oracle", "upper") => upper = Some(e.reals()?),
            ("smo", "n_init") => cfg.n_init = e.parse("an integer")?,
            ("smo", "budget") => cfg.budget = e.parse("an integer")?,
            ("smo", "acquisition") => a.kind = e.via(e.value.parse())?,
            ("smo", "seed") => cfg.seed = e.parse("an unsigned 64-bit integer")?,
            ("smo", "beta") => a.beta = e.real()?,
            ("smo", "xi") => a.xi = e.real()?,
            ("smo", "n_candidates") => a.n_candidates = e.parse("an integer")?,
            ("smo", "n_refine") => a.n_refine = e.parse("an integer")?,
            ("deup", "features") => {
                cfg.feature_set = if e.value.is_empty() { FeatureLayout::new([]) } else { e.via(e.value.parse())? }
            }
            ("deup", "aleatoric_mode") => cfg.aleatoric_mode = e.via(e.value.parse())?,
            ("deup", "replicates") => cfg.replicates = e.parse("an integer")?,
            ("deup", "pretrain") => cfg.pretrain = e.boolean()?,
            ("deup", "n_pretrain") => {
                cfg.n_pretrain = if e.value.eq_ignore_ascii_case("auto") { None } else { Some(e.parse("an integer")?) }
            }
            ("deup", "cv_folds") => cfg.cv_folds = e.parse("an integer")?,
            ("deup", "error_model") => {
                cfg.error_model = match e.value.to_ascii_lowercase().as_str() {
                    "auto" => ErrorModelChoice::Auto,
                    "gp" => ErrorModelChoice::Gp,
                    "mlp" => ErrorModelChoice::Mlp,
                    _ => return Err(e.err("expected auto, gp or mlp")),
                }
            }
            ("deup", "main_model") => {
                cfg.main_model = match e.value.to_ascii_lowercase().as_str() {
                    "gp" => LearnerKind::Gp,
                    "mlp" => LearnerKind::Mlp,
                    _ => return Err(e.err("expected gp or mlp")),
                }
            }
            ("deup", "error_gp_restarts") => cfg.error_gp_restarts = e.parse("an integer")?,
            ("deup", "variance_source") => {
                cfg.variance_source = match e.value.to_ascii_lowercase().as_str() {
                    "main" | "gp" => VarianceChoice::Main,
                    "ensemble" => VarianceChoice::Ensemble,
                    _ => return Err(e.err("expected main or ensemble")),
                }
            }
            ("deup", "ensemble_members") => cfg.ensemble_members = e.parse("an integer")?,
            ("gp", "kernel") => cfg.gp.kernel = e.via(e.value.parse::<Kernel>())?,
            ("gp", "restarts") => cfg.gp.restarts = e.parse("an integer")?,
            ("gp", "max_evals_per_restart") => cfg.gp.max_evals_per_restart = e.parse("an integer")?,
            ("gp", "noise_floor") => cfg.gp.noise_floor = e.real()?,
            ("gp", "noise_ceiling") => cfg.gp.noise_ceiling = e.real()?,
            ("gp", "lengthscale") => cfg.gp.fixed_lengthscale = e.real_or_auto()?,
            ("gp", "signal_variance") => cfg.gp.fixed_signal_variance = e.real_or_auto()?,
            ("gp", "noise_variance") => cfg.gp.fixed_noise_variance = e.real_or_auto()?,
            ("gp", "min_jitter") => cfg.gp.min_jitter = e.real()?,
            ("gp", "normalize_inputs") => cfg.gp.normalize_inputs = e.boolean()?,
            ("mlp", "hidden") => {
                cfg.mlp.hidden = e
                    .value
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().map_err(|_| e.err(format!("bad layer width `{}`", t.trim()))))
                    .collect::<Result<_>>()?
            }
            ("mlp", "epochs") => cfg.mlp.epochs = e.parse("an integer")?,
            ("mlp", "learning_rate") => cfg.mlp.learning_rate = e.real()?,
            ("mlp", "beta1") => cfg.mlp.beta1 = e.real()?,
            ("mlp", "beta2") => cfg.mlp.beta2 = e.real()?,
            ("mlp", "epsilon") => cfg.mlp.epsilon = e.real()?,
            ("mlp", "batch_size") => cfg.mlp.batch_size = e.parse("an integer")?,
            ("kde", "bandwidth") => cfg.kde_bandwidth = e.real_or_auto()?,
            _ => return Err(e.err("unknown key")),
        }
    }

    if !dimension_given {
        cfg.dimension = match cfg.oracle_name.as_str() {
            "levi13" | "levi" | "levy13" => 2,
            "synth1d" => 1,
            _ => cfg.dimension,
        };
    }
    cfg.noise = match noise_kind.as_str() {
        "zero" => NoiseProfile::Zero,
        "constant" => NoiseProfile::Constant(noise_std),
        "hetero" => NoiseProfile::Hetero { base: noise_std, amplitude: noise_amp, frequency: noise_freq },
        other => {
            return Err(DeupError::Schema {
                key: "oracle.noise".into(),
                line: 0,
                message: format!("expected zero, constant or hetero, got `{other}`"),
            })
        }
    };
    cfg.domain = match (lower, upper) {
        (None, None) => None,
        (Some(l), Some(u)) => Some(BoxDomain::new(l, u).map_err(|e| DeupError::Validation(e.to_string()))?),
        _ => return Err(DeupError::Validation("oracle.lower and oracle.upper must be given together".into())),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}
