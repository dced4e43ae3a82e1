//! One-dimensional recalibration demo.
//!
//! A GP fitted on both ends of `[0, 2]` is confidently wrong in the middle.
//! A second GP refitted with a few extra points from the middle reports a
//! small variance everywhere. An error predictor trained on the first GP's
//! observed errors, with log variance as its only feature, learns how badly
//! that variance understates the error.

use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::data::{Dataset, InputPoint, LabeledExample};
use crate::deup::{deup_fixed_train, AleatoricEstimator, DeupSettings, FeatureLayout, FeatureSpec};
use crate::error::Result;
use crate::models::{GpConfig, GpPredictor, Learner};
use crate::rng::RngStream;
use crate::stats::spearman;

pub const TRAIN_REGIONS: [(f64, f64); 2] = [(0.0, 0.5), (1.5, 2.0)];
pub const GAP: (f64, f64) = (0.5, 1.5);
pub const POINTS_PER_REGION: usize = 6;
pub const ACQUIRED: usize = 5;
pub const GRID_POINTS: usize = 401;

/// Ground truth: a slow sine with a narrow bump in the gap.
pub fn truth(x: f64) -> f64 {
    (3.0 * x).sin() + 1.5 * (-((x - 1.0) / 0.15).powi(2)).exp()
}

pub const CSV_COLUMNS: [&str; 8] =
    ["x", "f_true", "gp1_mean", "gp1_std", "gp2_mean", "gp2_std", "deup_eu", "true_sq_error"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig1Row {
    pub x: f64,
    pub f_true: f64,
    pub gp1_mean: f64,
    pub gp1_std: f64,
    pub gp2_mean: f64,
    pub gp2_std: f64,
    pub deup_eu: f64,
    /// Squared error of the first GP, whose errors the predictor learns.
    pub true_sq_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Result {
    pub seed: u64,
    pub train_x: Vec<f64>,
    pub acquired_x: Vec<f64>,
    pub rows: Vec<Fig1Row>,
    /// Spearman correlations with `true_sq_error` over the gap grid.
    pub gap_spearman_deup: f64,
    pub gap_spearman_gp2: f64,
}

impl Fig1Result {
    pub fn deup_wins(&self) -> bool {
        self.gap_spearman_deup > self.gap_spearman_gp2
    }

    pub fn gap_rows(&self) -> impl Iterator<Item = &Fig1Row> {
        self.rows.iter().filter(|r| r.x >= GAP.0 && r.x <= GAP.1)
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", CSV_COLUMNS.join(","))?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.x, r.f_true, r.gp1_mean, r.gp1_std, r.gp2_mean, r.gp2_std, r.deup_eu, r.true_sq_error
            )?;
        }
        Ok(())
    }
}

fn labeled(xs: &[f64]) -> Result<Dataset> {
    let mut d = Dataset::new();
    for &x in xs {
        d.push(LabeledExample::new(InputPoint::scalar(x)?, truth(x))?)?;
    }
    Ok(d)
}

pub fn run_fig1(seed: u64) -> Result<Fig1Result> {
    let root = RngStream::new(seed, "fig1");
    let mut rng = root.substream("design");
    let mut train_x: Vec<f64> = TRAIN_REGIONS
        .iter()
        .flat_map(|&(a, b)| (0..POINTS_PER_REGION).map(|_| rng.gen_range(a..b)).collect::<Vec<_>>())
        .collect();
    let mut acquired_x: Vec<f64> = (0..ACQUIRED).map(|_| rng.gen_range(GAP.0..GAP.1)).collect();
    train_x.sort_by(f64::total_cmp);
    acquired_x.sort_by(f64::total_cmp);

    let train = labeled(&train_x)?;
    let acquired = labeled(&acquired_x)?;
    let cfg = GpConfig::default();
    let settings = DeupSettings::new(Learner::Gp(cfg.clone()), FeatureSpec::new(FeatureLayout::variance_only()));
    let fixed = deup_fixed_train(&train, &acquired, &settings, AleatoricEstimator::zero(), &root.substream("deup"))?;
    let model = fixed.model;
    let gp1 = model.main.as_gp().expect("gp main learner");

    let mut union = train.clone();
    for e in acquired.iter() {
        union.push(e.clone())?;
    }
    let gp2 = GpPredictor::fit(&union.inputs(), &union.targets(), &cfg, &mut root.substream("gp2"))?;

    let mut rows = Vec::with_capacity(GRID_POINTS);
    for i in 0..GRID_POINTS {
        let x = 2.0 * i as f64 / (GRID_POINTS - 1) as f64;
        let (m1, v1) = gp1.posterior_unchecked(&[x]);
        let (m2, v2) = gp2.posterior_unchecked(&[x]);
        let f = truth(x);
        rows.push(Fig1Row {
            x,
            f_true: f,
            gp1_mean: m1,
            gp1_std: v1.sqrt(),
            gp2_mean: m2,
            gp2_std: v2.sqrt(),
            deup_eu: model.epistemic(&InputPoint::scalar(x)?),
            true_sq_error: (m1 - f).powi(2),
        });
    }
    let mut out = Fig1Result { seed, train_x, acquired_x, rows, gap_spearman_deup: 0.0, gap_spearman_gp2: 0.0 };
    let err: Vec<f64> = out.gap_rows().map(|r| r.true_sq_error).collect();
    let eu: Vec<f64> = out.gap_rows().map(|r| r.deup_eu).collect();
    let v2: Vec<f64> = out.gap_rows().map(|r| r.gp2_std * r.gp2_std).collect();
    out.gap_spearman_deup = spearman(&eu, &err);
    out.gap_spearman_gp2 = spearman(&v2, &err);
    Ok(out)
}
