//! Stationarizing features: dataset-dependent descriptors of a query point
//! that let one error predictor serve successive training sets.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, InputPoint};
use crate::density::KdePredictor;
use crate::error::{argument, DeupError, Result};
use crate::models::{Ensemble, FittedModel, GpConfig, GpPredictor, Learner, MlpConfig};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Feature {
    /// The raw input coordinates.
    X,
    /// 1 when the query is a member of the training set.
    SeenBit,
    /// Log kernel density of the training inputs at the query.
    LogDensity,
    /// Log model variance at the query.
    LogVariance,
}

impl Feature {
    pub fn name(self) -> &'static str {
        match self {
            Feature::X => "x",
            Feature::SeenBit => "seen_bit",
            Feature::LogDensity => "log_density",
            Feature::LogVariance => "log_variance",
        }
    }
}

impl FromStr for Feature {
    type Err = DeupError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Ok(Feature::X),
            "seen_bit" | "seen" => Ok(Feature::SeenBit),
            "log_density" | "density" => Ok(Feature::LogDensity),
            "log_variance" | "variance" => Ok(Feature::LogVariance),
            other => Err(argument(format!("unknown feature `{other}`"))),
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Ordered, duplicate-free feature list, always kept in the canonical order
/// `x, seen_bit, log_density, log_variance`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureLayout(Vec<Feature>);

impl FeatureLayout {
    pub fn new(features: impl IntoIterator<Item = Feature>) -> Self {
        let mut v: Vec<Feature> = features.into_iter().collect();
        v.sort();
        v.dedup();
        Self(v)
    }

    pub fn variance_only() -> Self {
        Self::new([Feature::LogVariance])
    }

    pub fn all() -> Self {
        Self::new([Feature::X, Feature::SeenBit, Feature::LogDensity, Feature::LogVariance])
    }

    pub fn features(&self) -> &[Feature] {
        &self.0
    }

    pub fn contains(&self, f: Feature) -> bool {
        self.0.contains(&f)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of numeric columns for inputs of dimension `input_dim`.
    pub fn width(&self, input_dim: usize) -> usize {
        self.0.iter().map(|f| if *f == Feature::X { input_dim } else { 1 }).sum()
    }

    pub fn column_names(&self, input_dim: usize) -> Vec<String> {
        let mut names = Vec::new();
        for f in &self.0 {
            match f {
                Feature::X => names.extend((0..input_dim).map(|i| format!("x_{i}"))),
                other => names.push(other.name().to_string()),
            }
        }
        names
    }
}

impl FromStr for FeatureLayout {
    type Err = DeupError;

    fn from_str(s: &str) -> Result<Self> {
        let features = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Feature::from_str)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(features))
    }
}

impl fmt::Display for FeatureLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|f| f.name()).collect();
        f.write_str(&names.join(","))
    }
}

/// Where the model-variance feature comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VarianceSource {
    /// Reuse the main predictor's posterior variance when it is a GP,
    /// otherwise fit a GP with default settings.
    MainModel,
    Gp(GpConfig),
    Ensemble { mlp: MlpConfig, members: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub layout: FeatureLayout,
    /// Kernel density bandwidth; Silverman's rule when `None`.
    pub kde_bandwidth: Option<f64>,
    pub variance_source: VarianceSource,
}

impl FeatureSpec {
    pub fn new(layout: FeatureLayout) -> Self {
        Self { layout, kde_bandwidth: None, variance_source: VarianceSource::MainModel }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum VarianceModel {
    Gp(GpPredictor),
    Ensemble(Ensemble),
}

impl VarianceModel {
    fn variance(&self, x: &[f64]) -> f64 {
        match self {
            VarianceModel::Gp(g) => g.posterior_unchecked(x).1,
            VarianceModel::Ensemble(e) => e.variance(x),
        }
    }
}

/// Feature estimators fitted on one specific dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureContext {
    layout: FeatureLayout,
    dataset: Dataset,
    fingerprint: u64,
    kde: Option<KdePredictor>,
    variance: Option<VarianceModel>,
}

/// One row of stationarizing features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub x: Option<InputPoint>,
    pub seen_bit: u8,
    pub log_density: Option<f64>,
    pub log_variance: Option<f64>,
    pub layout: FeatureLayout,
}

impl FeatureVector {
    /// Flattened numeric values in layout order.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for f in self.layout.features() {
            match f {
                Feature::X => out.extend_from_slice(self.x.as_ref().map(InputPoint::coords).unwrap_or(&[])),
                Feature::SeenBit => out.push(f64::from(self.seen_bit)),
                Feature::LogDensity => out.push(self.log_density.unwrap_or(f64::NAN)),
                Feature::LogVariance => out.push(self.log_variance.unwrap_or(f64::NAN)),
            }
        }
        out
    }
}

fn safe_ln(v: f64) -> f64 {
    v.max(f64::MIN_POSITIVE).ln()
}

impl FeatureContext {
    /// Fits the density and variance estimators required by `spec.layout` on `d`.
    pub fn fit(d: &Dataset, spec: &FeatureSpec, main: &FittedModel, rng: &RngStream) -> Result<Self> {
        if d.is_empty() {
            return Err(argument("feature context needs a nonempty dataset"));
        }
        let layout = spec.layout.clone();
        let kde = if layout.contains(Feature::LogDensity) {
            Some(KdePredictor::fit(d.inputs(), spec.kde_bandwidth)?)
        } else {
            None
        };
        let variance = if layout.contains(Feature::LogVariance) {
            Some(match (&spec.variance_source, main) {
                (VarianceSource::MainModel, FittedModel::Gp(g)) => VarianceModel::Gp(g.clone()),
                (VarianceSource::MainModel, _) => VarianceModel::Gp(GpPredictor::fit(
                    &d.inputs(),
                    &d.targets(),
                    &GpConfig::default(),
                    &mut rng.substream("variance-gp"),
                )?),
                (VarianceSource::Gp(cfg), _) => VarianceModel::Gp(GpPredictor::fit(
                    &d.inputs(),
                    &d.targets(),
                    cfg,
                    &mut rng.substream("variance-gp"),
                )?),
                (VarianceSource::Ensemble { mlp, members }, _) => VarianceModel::Ensemble(Ensemble::fit(
                    &Learner::Mlp(mlp.clone()),
                    d,
                    *members,
                    &rng.substream("variance-ensemble"),
                )?),
            })
        } else {
            None
        };
        Ok(Self { layout, dataset: d.clone(), fingerprint: d.fingerprint(), kde, variance })
    }

    pub fn layout(&self) -> &FeatureLayout {
        &self.layout
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn is_fitted_on(&self, d: &Dataset) -> bool {
        self.dataset.len() == d.len() && self.fingerprint == d.fingerprint()
    }

    /// Model variance from the variance source, if one was fitted.
    pub fn model_variance(&self, x: &[f64]) -> Option<f64> {
        self.variance.as_ref().map(|v| v.variance(x))
    }

    pub(crate) fn features_unchecked(&self, x: &InputPoint) -> FeatureVector {
        let l = &self.layout;
        FeatureVector {
            x: l.contains(Feature::X).then(|| x.clone()),
            seen_bit: u8::from(self.dataset.contains(x)),
            log_density: self.kde.as_ref().map(|k| k.log_density_unchecked(x.coords())),
            log_variance: self.variance.as_ref().map(|v| safe_ln(v.variance(x.coords()))),
            layout: l.clone(),
        }
    }
}

/// Computes `φ_D(x)`; fails if `ctx` was fitted on a dataset other than `d`.
pub fn build_features(d: &Dataset, x: &InputPoint, ctx: &FeatureContext) -> Result<FeatureVector> {
    if !ctx.is_fitted_on(d) {
        return Err(DeupError::StaleContext {
            fitted: ctx.dataset.len(),
            fitted_fp: ctx.fingerprint,
            queried: d.len(),
            queried_fp: d.fingerprint(),
        });
    }
    if let Some(dim) = d.dimension() {
        if dim != x.dimension() {
            return Err(argument(format!("query dimension {} vs dataset dimension {dim}", x.dimension())));
        }
    }
    Ok(ctx.features_unchecked(x))
}
