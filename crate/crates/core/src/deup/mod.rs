//! Direct epistemic uncertainty prediction.
//!
//! A secondary learner `u` is trained to predict the log squared error that
//! the main predictor makes on points it has not been trained on. Its inputs
//! are stationarizing features `φ_D(x)` (see [`features`]), so rows collected
//! under earlier training sets remain informative after refits. Epistemic
//! uncertainty is then `max(exp(u(φ_D(x))) - a(x), 0)` where `a` estimates the
//! aleatoric part.

pub mod aleatoric;
pub mod features;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{split_dataset, Dataset, InputPoint, LabeledExample};
use crate::error::{argument, Result};
use crate::models::{FittedModel, GpConfig, Learner, MlpConfig};
use crate::rng::RngStream;
use crate::stats::sample_variance;

pub use aleatoric::{
    estimate_aleatoric_from_replicates, replicate_groups, replicate_target, AleatoricEstimator, AleatoricMode,
    ReplicateGroup,
};
pub use features::{build_features, Feature, FeatureContext, FeatureLayout, FeatureSpec, FeatureVector, VarianceSource};

/// Floor added to squared errors before taking logs.
pub const LOG_TARGET_EPSILON: f64 = 1e-10;

/// `ln((y - prediction)² + ε)`.
pub fn log_error_target(y: f64, prediction: f64, epsilon: f64) -> f64 {
    ((y - prediction).powi(2) + epsilon).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeupSettings {
    pub main_learner: Learner,
    /// Error-predictor learner; `None` picks a GP when the layout excludes
    /// raw inputs and an MLP otherwise.
    pub error_learner: Option<Learner>,
    pub features: FeatureSpec,
    pub epsilon: f64,
}

impl DeupSettings {
    pub fn new(main_learner: Learner, features: FeatureSpec) -> Self {
        Self { main_learner, error_learner: None, features, epsilon: LOG_TARGET_EPSILON }
    }

    /// Raises the jitter floor of every GP learner in these settings.
    pub fn set_min_jitter(&mut self, jitter: f64) {
        let mut learner = self.resolved_error_learner();
        for l in [&mut self.main_learner, &mut learner] {
            if let Learner::Gp(cfg) = l {
                cfg.min_jitter = cfg.min_jitter.max(jitter);
            }
        }
        self.error_learner = Some(learner);
    }

    pub fn resolved_error_learner(&self) -> Learner {
        match &self.error_learner {
            Some(l) => l.clone(),
            None if self.features.layout.contains(Feature::X) => Learner::Mlp(MlpConfig::default()),
            None => Learner::Gp(GpConfig { normalize_inputs: true, ..GpConfig::default() }),
        }
    }
}

/// One training row of the error predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub features: FeatureVector,
    pub target_log_error: f64,
}

/// The error predictor's training set `D_u`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorDataset {
    rows: Vec<ErrorRow>,
}

impl ErrorDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: ErrorRow) -> Result<()> {
        if let Some(first) = self.rows.first() {
            if first.features.layout != row.features.layout {
                return Err(argument("feature layout differs from earlier rows"));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[ErrorRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn xy(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            self.rows.iter().map(|r| r.features.values()).collect(),
            self.rows.iter().map(|r| r.target_log_error).collect(),
        )
    }

    /// CSV with columns `feature_0..feature_k,target_log_error`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let width = self.rows.first().map_or(0, |r| r.features.values().len());
        let mut header: Vec<String> = (0..width).map(|i| format!("feature_{i}")).collect();
        header.push("target_log_error".into());
        writeln!(w, "{}", header.join(","))?;
        for r in &self.rows {
            let mut cells: Vec<String> = r.features.values().iter().map(|v| format!("{v:e}")).collect();
            cells.push(format!("{:e}", r.target_log_error));
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum ErrorModel {
    Fitted(FittedModel),
    /// Used while `D_u` holds fewer than two rows.
    Constant(f64),
}

/// Predicts the log squared error of the main predictor from features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorPredictor {
    model: ErrorModel,
    layout: FeatureLayout,
    epsilon: f64,
}

impl ErrorPredictor {
    pub fn fit(data: &ErrorDataset, learner: &Learner, layout: &FeatureLayout, epsilon: f64, rng: &mut RngStream) -> Result<Self> {
        let (xs, ys) = data.xy();
        let model = ErrorModel::Fitted(learner.fit(&xs, &ys, rng)?);
        Ok(Self { model, layout: layout.clone(), epsilon })
    }

    /// Error predictor returning a fixed log error, used before any
    /// out-of-sample rows exist.
    pub fn constant(log_error: f64, layout: &FeatureLayout, epsilon: f64) -> Self {
        Self { model: ErrorModel::Constant(log_error), layout: layout.clone(), epsilon }
    }

    pub fn predict_log(&self, features: &FeatureVector) -> f64 {
        match &self.model {
            ErrorModel::Fitted(m) => m.predict(&features.values()),
            ErrorModel::Constant(c) => *c,
        }
    }

    /// Predicted squared error (total uncertainty), always nonnegative.
    pub fn predict(&self, features: &FeatureVector) -> f64 {
        self.predict_log(features).exp()
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Main predictor, error predictor, aleatoric estimator and the feature
/// context they were fitted against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyModel {
    pub main: FittedModel,
    pub error: ErrorPredictor,
    pub aleatoric: AleatoricEstimator,
    pub context: FeatureContext,
}

impl UncertaintyModel {
    pub fn mean(&self, x: &[f64]) -> f64 {
        self.main.predict(x)
    }

    pub fn features(&self, x: &InputPoint) -> FeatureVector {
        self.context.features_unchecked(x)
    }

    /// Predicted total uncertainty `exp(u(φ_D(x)))`.
    pub fn total_uncertainty(&self, x: &InputPoint) -> f64 {
        self.error.predict(&self.features(x))
    }

    /// `max(exp(u(φ_D(x))) - a(x), 0)`.
    pub fn epistemic(&self, x: &InputPoint) -> f64 {
        (self.total_uncertainty(x) - self.aleatoric.predict(x.coords())).max(0.0)
    }

    pub fn epistemic_at(&self, coords: &[f64]) -> Result<f64> {
        Ok(self.epistemic(&InputPoint::new(coords.to_vec())?))
    }
}

/// Query `E(x)` of a fitted model.
pub fn epistemic(model: &UncertaintyModel, x: &InputPoint) -> f64 {
    model.epistemic(x)
}

fn error_row(ctx: &FeatureContext, main: &FittedModel, x: &InputPoint, y: f64, eps: f64) -> ErrorRow {
    ErrorRow {
        features: ctx.features_unchecked(x),
        target_log_error: log_error_target(y, main.predict(x.coords()), eps),
    }
}

#[derive(Debug, Clone)]
pub struct FixedTraining {
    pub model: UncertaintyModel,
    pub error_data: ErrorDataset,
    /// Set when no out-of-sample rows were available.
    pub in_sample_only: bool,
}

/// Fixed-training-set procedure: fit `f̂` on `train`, then fit `u` on the
/// errors of `f̂` over `train ∪ out_of_sample`.
pub fn deup_fixed_train(
    train: &Dataset,
    out_of_sample: &Dataset,
    settings: &DeupSettings,
    aleatoric: AleatoricEstimator,
    rng: &RngStream,
) -> Result<FixedTraining> {
    if train.is_empty() {
        return Err(argument("training set is empty"));
    }
    let main = settings.main_learner.fit_dataset(train, &mut rng.substream("main"))?;
    let context = FeatureContext::fit(train, &settings.features, &main, &rng.substream("features"))?;
    let mut data = ErrorDataset::new();
    for e in train.iter().chain(out_of_sample.iter()) {
        data.push(error_row(&context, &main, &e.x, e.y, settings.epsilon))?;
    }
    let error = ErrorPredictor::fit(
        &data,
        &settings.resolved_error_learner(),
        &settings.features.layout,
        settings.epsilon,
        &mut rng.substream("error"),
    )?;
    Ok(FixedTraining {
        model: UncertaintyModel { main, error, aleatoric, context },
        error_data: data,
        in_sample_only: out_of_sample.is_empty(),
    })
}

/// Cross-validation pre-filling of `D_u`.
///
/// Each round splits `d_init` into `k` random folds; every fold in turn is
/// held out while `f̂` and the features are fitted on the remaining folds,
/// and one row is appended for every example of `d_init`. Stops as soon as
/// `D_u` holds at least `n_pretrain` rows.
pub fn deup_pretrain_cv(
    d_init: &Dataset,
    k: usize,
    n_pretrain: usize,
    settings: &DeupSettings,
    rng: &RngStream,
) -> Result<ErrorDataset> {
    if k < 2 || d_init.len() < k {
        return Err(argument(format!("need k >= 2 and at least k examples (k = {k}, n = {})", d_init.len())));
    }
    let mut data = ErrorDataset::new();
    let mut round = 0;
    while data.len() < n_pretrain {
        let folds = split_dataset(d_init, k, &mut rng.substream(format!("split-{round}")))?;
        for held_out in (0..k).rev() {
            if data.len() >= n_pretrain {
                break;
            }
            let mut fit_on = Dataset::new();
            for (i, fold) in folds.iter().enumerate() {
                if i != held_out {
                    for e in fold.iter() {
                        fit_on.push(e.clone())?;
                    }
                }
            }
            let pass_rng = rng.substream(format!("pass-{round}-{held_out}"));
            let main = settings.main_learner.fit_dataset(&fit_on, &mut pass_rng.substream("main"))?;
            let ctx = FeatureContext::fit(&fit_on, &settings.features, &main, &pass_rng.substream("features"))?;
            for e in d_init.iter() {
                data.push(error_row(&ctx, &main, &e.x, e.y, settings.epsilon))?;
            }
        }
        round += 1;
    }
    Ok(data)
}

/// Default pre-filling target: four rows per initial example.
pub fn default_pretrain_size(n_init: usize) -> usize {
    4 * n_init
}

/// How the aleatoric estimator is (re)built from the current dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AleatoricSpec {
    Zero,
    Known(crate::benchmarks::NoiseProfile),
    Replicates(Learner),
}

impl AleatoricSpec {
    fn fit(&self, d: &Dataset, rng: &mut RngStream) -> Result<AleatoricEstimator> {
        match self {
            AleatoricSpec::Zero => Ok(AleatoricEstimator::zero()),
            AleatoricSpec::Known(p) => Ok(AleatoricEstimator::known(p.clone())),
            AleatoricSpec::Replicates(learner) => estimate_aleatoric_from_replicates(&replicate_groups(d), learner, rng),
        }
    }
}

/// State of the interactive procedure: training set `D`, error data `D_u`
/// and the current fitted uncertainty model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeupState {
    settings: DeupSettings,
    aleatoric_spec: AleatoricSpec,
    dataset: Dataset,
    error_data: ErrorDataset,
    model: UncertaintyModel,
    steps: usize,
    rng_seed: u64,
    rng_label: String,
}

impl DeupState {
    /// Fits `f̂`, features, `a` and `u` on `d_init` and the (possibly
    /// pre-filled) error data.
    pub fn new(
        d_init: Dataset,
        error_data: ErrorDataset,
        settings: DeupSettings,
        aleatoric_spec: AleatoricSpec,
        rng: &RngStream,
    ) -> Result<Self> {
        let model = Self::fit_models(&d_init, &error_data, &settings, &aleatoric_spec, &rng.substream("init"))?;
        Ok(Self {
            settings,
            aleatoric_spec,
            dataset: d_init,
            error_data,
            model,
            steps: 0,
            rng_seed: rng.seed(),
            rng_label: rng.label().to_string(),
        })
    }

    fn fit_models(
        d: &Dataset,
        error_data: &ErrorDataset,
        settings: &DeupSettings,
        aleatoric_spec: &AleatoricSpec,
        rng: &RngStream,
    ) -> Result<UncertaintyModel> {
        let main = settings.main_learner.fit_dataset(d, &mut rng.substream("main"))?;
        let context = FeatureContext::fit(d, &settings.features, &main, &rng.substream("features"))?;
        let aleatoric = aleatoric_spec.fit(d, &mut rng.substream("aleatoric"))?;
        let error = Self::fit_error(d, error_data, settings, rng)?;
        Ok(UncertaintyModel { main, error, aleatoric, context })
    }

    fn fit_error(d: &Dataset, error_data: &ErrorDataset, settings: &DeupSettings, rng: &RngStream) -> Result<ErrorPredictor> {
        if error_data.len() < 2 {
            // Uninformed prior: the spread of the targets themselves.
            let spread = sample_variance(&d.targets()).max(settings.epsilon);
            return Ok(ErrorPredictor::constant(spread.ln(), &settings.features.layout, settings.epsilon));
        }
        ErrorPredictor::fit(
            error_data,
            &settings.resolved_error_learner(),
            &settings.features.layout,
            settings.epsilon,
            &mut rng.substream("error"),
        )
    }

    fn step_rng(&self) -> RngStream {
        RngStream::new(self.rng_seed, format!("{}/step-{}", self.rng_label, self.steps + 1))
    }

    /// Incorporates an acquired `(x, y)`.
    ///
    /// Appends the out-of-sample row (features and error of the current
    /// `f̂`), adds the point to `D`, refits `f̂`, features and `a`, appends the
    /// in-sample row under the refitted model, and refits `u`. On error the
    /// state is left untouched.
    pub fn step(&mut self, x_acq: InputPoint, y_acq: f64) -> Result<()> {
        if Some(x_acq.dimension()) != self.dataset.dimension() {
            return Err(argument(format!("acquired point has dimension {}", x_acq.dimension())));
        }
        let eps = self.settings.epsilon;
        let rng = self.step_rng();
        let mut error_data = self.error_data.clone();
        error_data.push(error_row(&self.model.context, &self.model.main, &x_acq, y_acq, eps))?;

        let mut dataset = self.dataset.clone();
        dataset.push(LabeledExample::new(x_acq.clone(), y_acq)?)?;
        let main = self.settings.main_learner.fit_dataset(&dataset, &mut rng.substream("main"))?;
        let context = FeatureContext::fit(&dataset, &self.settings.features, &main, &rng.substream("features"))?;
        let aleatoric = self.aleatoric_spec.fit(&dataset, &mut rng.substream("aleatoric"))?;
        error_data.push(error_row(&context, &main, &x_acq, y_acq, eps))?;
        let error = Self::fit_error(&dataset, &error_data, &self.settings, &rng)?;

        self.model = UncertaintyModel { main, error, aleatoric, context };
        self.dataset = dataset;
        self.error_data = error_data;
        self.steps += 1;
        Ok(())
    }

    pub fn model(&self) -> &UncertaintyModel {
        &self.model
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn error_data(&self) -> &ErrorDataset {
        &self.error_data
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn settings(&self) -> &DeupSettings {
        &self.settings
    }

    /// Raises the GP jitter floor used by later steps.
    pub fn set_min_jitter(&mut self, jitter: f64) {
        self.settings.set_min_jitter(jitter);
    }
}

/// Functional form of [`DeupState::step`].
pub fn deup_interactive_step(mut state: DeupState, x_acq: InputPoint, y_acq: f64) -> Result<DeupState> {
    state.step(x_acq, y_acq)?;
    Ok(state)
}
