//! Sequential model-based optimization: initial design, acquisition loop and
//! run traces.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{argmax_acquisition_scored, AcquisitionKind, SurrogateContext};
use crate::benchmarks::Oracle;
use crate::config::{ErrorModelChoice, ExperimentConfig};
use crate::data::{Dataset, InputPoint, LabeledExample};
use crate::deup::{
    default_pretrain_size, deup_pretrain_cv, AleatoricMode, AleatoricSpec, DeupSettings, DeupState, ErrorDataset,
    Feature, FeatureSpec,
};
use crate::error::{DeupError, Result};
use crate::models::{GpConfig, GpPredictor, Learner, LearnerKind};
use crate::rng::RngStream;
use crate::stats::{mean, standard_error};

/// Jitter floor used when a fit is retried after a numeric failure.
pub const RETRY_JITTER: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitRecord {
    pub x: Vec<f64>,
    pub y: f64,
}

/// One acquisition: the queried point, its outcome and the state after it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub best: f64,
    pub acq_value: f64,
    /// Epistemic estimate at `x` before the point was observed: DEUP's
    /// `E(x)` or the GP posterior variance; NaN for random search.
    pub epistemic: f64,
    /// Wall time of the step in milliseconds.
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub oracle: String,
    pub mode: AcquisitionKind,
    pub seed: u64,
    pub n_init: usize,
    pub budget: usize,
    pub best_value: f64,
    pub best_x: Vec<f64>,
    pub evaluations: usize,
    pub complete: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: ExperimentConfig,
    pub init: Vec<InitRecord>,
    pub records: Vec<StepRecord>,
    pub summary: RunSummary,
}

impl RunTrace {
    fn start(cfg: &ExperimentConfig, oracle: &Oracle, init: Vec<InitRecord>) -> Self {
        let (best_x, best_value) = init
            .iter()
            .fold((Vec::new(), f64::NEG_INFINITY), |acc, r| if r.y > acc.1 { (r.x.clone(), r.y) } else { acc });
        Self {
            config: cfg.clone(),
            summary: RunSummary {
                oracle: oracle.name().to_string(),
                mode: cfg.acquisition.kind,
                seed: cfg.seed,
                n_init: cfg.n_init,
                budget: cfg.budget,
                best_value,
                best_x,
                evaluations: init.len(),
                complete: true,
                failure: None,
            },
            init,
            records: Vec::new(),
        }
    }

    fn push(&mut self, step: usize, x: Vec<f64>, y: f64, acq_value: f64, epistemic: f64, started: Instant) {
        if y > self.summary.best_value {
            self.summary.best_value = y;
            self.summary.best_x = x.clone();
        }
        self.summary.evaluations += 1;
        self.records.push(StepRecord {
            step,
            x,
            y,
            best: self.summary.best_value,
            acq_value,
            epistemic,
            ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }

    fn abort(&mut self, err: &DeupError) {
        self.summary.complete = false;
        self.summary.failure = Some(err.to_string());
    }

    pub fn init_best(&self) -> f64 {
        self.init.iter().map(|r| r.y).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Best value after the initial design followed by the value after
    /// every acquisition (`budget - n_init + 1` entries for a full run).
    pub fn best_curve(&self) -> Vec<f64> {
        std::iter::once(self.init_best()).chain(best_so_far(self)).collect()
    }

    /// Equality of everything except wall times.
    pub fn same_outcome(&self, other: &RunTrace) -> bool {
        let strip = |t: &RunTrace| {
            let mut t = t.clone();
            t.records.iter_mut().for_each(|r| r.ms = 0.0);
            t
        };
        bits_eq(&strip(self), &strip(other))
    }
}

fn bits_eq(a: &RunTrace, b: &RunTrace) -> bool {
    // NaN != NaN, so compare the serialized form.
    serde_json::to_string(a).ok() == serde_json::to_string(b).ok()
}

/// Running maximum of `ys` starting from `start`.
pub fn running_best(start: f64, ys: &[f64]) -> Vec<f64> {
    ys.iter()
        .scan(start, |best, y| {
            *best = best.max(*y);
            Some(*best)
        })
        .collect()
}

/// Best value observed after each acquisition, including the initial design.
pub fn best_so_far(trace: &RunTrace) -> Vec<f64> {
    let ys: Vec<f64> = trace.records.iter().map(|r| r.y).collect();
    running_best(trace.init_best(), &ys)
}

/// Number of acquisitions until the best value first reaches `threshold`;
/// 0 if the initial design already does, `None` if the run never does.
pub fn steps_to_reach(trace: &RunTrace, threshold: f64) -> Option<usize> {
    if trace.init_best() >= threshold {
        return Some(0);
    }
    trace.records.iter().position(|r| r.best >= threshold).map(|i| i + 1)
}

/// Initial design: `n_init` uniform points (or `n_init / K` points queried
/// `K` times each in replicate mode). Draws only from the `init-design`
/// stream, so every mode under one seed starts from the same points.
pub fn initial_design(cfg: &ExperimentConfig, oracle: &Oracle, root: &RngStream) -> Result<Dataset> {
    let mut design_rng = root.substream("init-design");
    let mut noise_rng = root.substream("init-noise");
    let mut d = Dataset::new();
    if cfg.aleatoric_mode == AleatoricMode::Replicates {
        for g in 0..cfg.n_init / cfg.replicates {
            let x = oracle.domain().sample_point(&mut design_rng);
            for y in oracle.sample(&x, &mut noise_rng, cfg.replicates)? {
                d.push(LabeledExample::new(x.clone(), y)?.with_replicate(g as u64))?;
            }
        }
    } else {
        for _ in 0..cfg.n_init {
            let x = oracle.domain().sample_point(&mut design_rng);
            let y = oracle.sample(&x, &mut noise_rng, 1)?[0];
            d.push(LabeledExample::new(x, y)?)?;
        }
    }
    Ok(d)
}

/// Settings of the DEUP model used by the DEUP acquisition modes.
pub fn deup_settings(cfg: &ExperimentConfig) -> DeupSettings {
    let error_gp = Learner::Gp(GpConfig { restarts: cfg.error_gp_restarts, normalize_inputs: true, ..GpConfig::default() });
    let error_learner = match cfg.error_model {
        ErrorModelChoice::Gp => error_gp,
        ErrorModelChoice::Mlp => Learner::Mlp(cfg.mlp.clone()),
        ErrorModelChoice::Auto if cfg.feature_set.contains(Feature::X) => Learner::Mlp(cfg.mlp.clone()),
        ErrorModelChoice::Auto => error_gp,
    };
    let features = FeatureSpec {
        layout: cfg.feature_set.clone(),
        kde_bandwidth: cfg.kde_bandwidth,
        variance_source: cfg.variance_source(),
    };
    let main = match cfg.main_model {
        LearnerKind::Gp => Learner::Gp(cfg.gp.clone()),
        LearnerKind::Mlp => Learner::Mlp(cfg.mlp.clone()),
    };
    DeupSettings { error_learner: Some(error_learner), ..DeupSettings::new(main, features) }
}

pub fn aleatoric_spec(cfg: &ExperimentConfig, oracle: &Oracle) -> AleatoricSpec {
    match cfg.aleatoric_mode {
        AleatoricMode::Zero => AleatoricSpec::Zero,
        AleatoricMode::Known => AleatoricSpec::Known(oracle.noise().clone()),
        AleatoricMode::Replicates => AleatoricSpec::Replicates(Learner::Gp(GpConfig::default())),
    }
}

fn fit_gp_with_retry(d: &Dataset, cfg: &GpConfig, rng: &RngStream) -> Result<GpPredictor> {
    let xs = d.inputs();
    let ys = d.targets();
    GpPredictor::fit(&xs, &ys, cfg, &mut rng.substream("gp")).or_else(|_| {
        let escalated = GpConfig { min_jitter: cfg.min_jitter.max(RETRY_JITTER), ..cfg.clone() };
        GpPredictor::fit(&xs, &ys, &escalated, &mut rng.substream("gp-retry"))
    })
}

fn init_records(d: &Dataset) -> Vec<InitRecord> {
    d.iter().map(|e| InitRecord { x: e.x.coords().to_vec(), y: e.y }).collect()
}

/// Runs one optimization until `budget` oracle calls have been made.
///
/// Invalid configurations are errors. A model-fit failure that persists
/// after one jitter escalation ends the run early with
/// `summary.complete = false`.
pub fn run_smo(cfg: &ExperimentConfig) -> Result<RunTrace> {
    cfg.validate()?;
    let oracle = cfg.oracle()?;
    let root = RngStream::new(cfg.seed, "smo");
    let d = initial_design(cfg, &oracle, &root)?;
    let mut trace = RunTrace::start(cfg, &oracle, init_records(&d));
    let steps = cfg.budget - d.len();
    let mut noise_rng = root.substream("oracle-noise");
    let kind = cfg.acquisition.kind;

    if kind.uses_deup() {
        run_deup_loop(cfg, &oracle, d, steps, &root, &mut noise_rng, &mut trace);
        return Ok(trace);
    }

    let mut d = d;
    for step in 1..=steps {
        let started = Instant::now();
        let step_rng = root.substream(format!("step-{step}"));
        let outcome = (|| -> Result<(InputPoint, f64, f64)> {
            if kind == AcquisitionKind::Random {
                let (x, s) = argmax_acquisition_scored(
                    &cfg.acquisition,
                    oracle.domain(),
                    &SurrogateContext::None,
                    &mut step_rng.substream("acquire"),
                )?;
                return Ok((x, s, f64::NAN));
            }
            let gp = fit_gp_with_retry(&d, &cfg.gp, &step_rng)?;
            let best = d.best_target().unwrap_or(f64::NEG_INFINITY);
            let ctx = SurrogateContext::Gp { model: &gp, best };
            let (x, s) =
                argmax_acquisition_scored(&cfg.acquisition, oracle.domain(), &ctx, &mut step_rng.substream("acquire"))?;
            let var = gp.posterior(x.coords())?.1;
            Ok((x, s, var))
        })();
        let (x, acq, eu) = match outcome {
            Ok(v) => v,
            Err(e) => {
                trace.abort(&e);
                break;
            }
        };
        let y = match oracle.sample(&x, &mut noise_rng, 1) {
            Ok(v) => v[0],
            Err(e) => {
                trace.abort(&e);
                break;
            }
        };
        if let Err(e) = LabeledExample::new(x.clone(), y).and_then(|ex| d.push(ex)) {
            trace.abort(&e);
            break;
        }
        trace.push(step, x.into_coords(), y, acq, eu, started);
    }
    Ok(trace)
}

/// DEUP state after cross-validation pretraining on the initial design,
/// retried once with escalated jitter.
pub fn initial_deup_state(cfg: &ExperimentConfig, oracle: &Oracle, d: &Dataset, root: &RngStream) -> Result<DeupState> {
    let settings = deup_settings(cfg);
    let du = if cfg.pretrain {
        let n = cfg.n_pretrain.unwrap_or_else(|| default_pretrain_size(d.len()));
        deup_pretrain_cv(d, cfg.cv_folds, n, &settings, &root.substream("pretrain"))?
    } else {
        ErrorDataset::new()
    };
    let spec = aleatoric_spec(cfg, oracle);
    DeupState::new(d.clone(), du.clone(), settings.clone(), spec.clone(), &root.substream("deup")).or_else(|_| {
        let mut s = settings;
        s.set_min_jitter(RETRY_JITTER);
        DeupState::new(d.clone(), du, s, spec, &root.substream("deup"))
    })
}

/// Initial design of `cfg` and the DEUP state fitted on it, with the same
/// streams `run_smo` uses.
pub fn fit_uncertainty(cfg: &ExperimentConfig) -> Result<DeupState> {
    cfg.validate()?;
    let oracle = cfg.oracle()?;
    let root = RngStream::new(cfg.seed, "smo");
    let d = initial_design(cfg, &oracle, &root)?;
    initial_deup_state(cfg, &oracle, &d, &root)
}

fn run_deup_loop(
    cfg: &ExperimentConfig,
    oracle: &Oracle,
    d: Dataset,
    steps: usize,
    root: &RngStream,
    noise_rng: &mut RngStream,
    trace: &mut RunTrace,
) {
    let mut state = match initial_deup_state(cfg, oracle, &d, root) {
        Ok(s) => s,
        Err(e) => return trace.abort(&e),
    };
    for step in 1..=steps {
        let started = Instant::now();
        let step_rng = root.substream(format!("step-{step}"));
        let best = state.dataset().best_target().unwrap_or(f64::NEG_INFINITY);
        let ctx = SurrogateContext::Deup { model: state.model(), best };
        let acquired = argmax_acquisition_scored(&cfg.acquisition, oracle.domain(), &ctx, &mut step_rng.substream("acquire"))
            .and_then(|(x, s)| {
                let y = oracle.sample(&x, noise_rng, 1)?[0];
                Ok((x, s, y))
            });
        let (x, acq, y) = match acquired {
            Ok(v) => v,
            Err(e) => return trace.abort(&e),
        };
        let eu = state.model().epistemic(&x);
        if state.step(x.clone(), y).is_err() {
            state.set_min_jitter(RETRY_JITTER);
            if let Err(e) = state.step(x.clone(), y) {
                // The oracle call happened; record it before stopping.
                trace.push(step, x.into_coords(), y, acq, eu, started);
                return trace.abort(&e);
            }
        }
        trace.push(step, x.into_coords(), y, acq, eu, started);
    }
}

/// Runs one configuration under several seeds in parallel.
pub fn run_seeds(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<RunTrace>> {
    seeds
        .par_iter()
        .map(|s| run_smo(&ExperimentConfig { seed: *s, ..cfg.clone() }))
        .collect()
}

fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:?}")
    }
}

/// Trace CSV: `step,x_0..x_{d-1},y,best,acq_value,epistemic,ms`, with the
/// initial design as step-0 rows.
pub fn write_trace_csv(trace: &RunTrace, mut w: impl Write) -> Result<()> {
    let d = trace.config.dimension;
    let mut header = vec!["step".to_string()];
    header.extend((0..d).map(|j| format!("x_{j}")));
    header.extend(["y", "best", "acq_value", "epistemic", "ms"].map(String::from));
    writeln!(w, "{}", header.join(","))?;
    let mut best = f64::NEG_INFINITY;
    for r in &trace.init {
        best = best.max(r.y);
        let mut cells = vec!["0".to_string()];
        cells.extend(r.x.iter().map(|v| fmt_f(*v)));
        cells.extend([fmt_f(r.y), fmt_f(best), "NaN".into(), "NaN".into(), "0".into()]);
        writeln!(w, "{}", cells.join(","))?;
    }
    for r in &trace.records {
        let mut cells = vec![r.step.to_string()];
        cells.extend(r.x.iter().map(|v| fmt_f(*v)));
        cells.extend([fmt_f(r.y), fmt_f(r.best), fmt_f(r.acq_value), fmt_f(r.epistemic), format!("{:.3}", r.ms)]);
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// One parsed row of a trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub x: Vec<f64>,
    pub y: f64,
    pub best: f64,
    pub acq_value: f64,
    pub epistemic: f64,
    pub ms: f64,
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let path = path.as_ref();
    let bad = |line: usize, m: &str| DeupError::Validation(format!("{}:{line}: {m}", path.display()));
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty trace file"))??;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 7 || cols[0] != "step" || cols[cols.len() - 5..] != ["y", "best", "acq_value", "epistemic", "ms"] {
        return Err(bad(1, "unexpected trace header"));
    }
    let d = cols.len() - 6;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != cols.len() {
            return Err(bad(i + 2, "wrong number of columns"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2, "bad number"));
        rows.push(TraceRow {
            step: cells[0].parse().map_err(|_| bad(i + 2, "bad step"))?,
            x: cells[1..=d].iter().map(|c| num(c)).collect::<Result<_>>()?,
            y: num(cells[d + 1])?,
            best: num(cells[d + 2])?,
            acq_value: num(cells[d + 3])?,
            epistemic: num(cells[d + 4])?,
            ms: num(cells[d + 5])?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub summary: RunSummary,
    pub trace_file: String,
    pub config: ExperimentConfig,
}

/// File stem `<oracle>_<mode>_seed<seed>`.
pub fn run_stem(trace: &RunTrace) -> String {
    stem_for(&trace.summary.oracle, trace.summary.mode, trace.summary.seed)
}

/// File stem `{oracle}_{mode}_seed{seed}` of a run's output files.
pub fn stem_for(oracle: &str, mode: AcquisitionKind, seed: u64) -> String {
    format!("{oracle}_{}_seed{seed}", mode.name().to_ascii_lowercase())
}

/// Writes `<stem>.trace.csv` and `<stem>.summary.json` into `dir`.
pub fn write_run(trace: &RunTrace, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    let stem = run_stem(trace);
    let csv = dir.join(format!("{stem}.trace.csv"));
    let json = dir.join(format!("{stem}.summary.json"));
    let mut buf = Vec::new();
    write_trace_csv(trace, &mut buf)?;
    fs::write(&csv, buf)?;
    let summary = SummaryFile {
        summary: trace.summary.clone(),
        trace_file: format!("{stem}.trace.csv"),
        config: trace.config.clone(),
    };
    fs::write(&json, serde_json::to_string_pretty(&summary)?)?;
    Ok((csv, json))
}

/// Mean and standard error of the best value at one step across runs of a mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: String,
    pub step: usize,
    pub mean_best: f64,
    pub se_best: f64,
    pub n_runs: usize,
}

/// Per-mode best curves from every `*.summary.json` in `dir`.
///
/// Step 0 is the best of the initial design. Runs of different oracles in
/// one directory are refused.
pub fn report_traces(dir: impl AsRef<Path>) -> Result<Vec<ReportRow>> {
    let dir = dir.as_ref();
    let mut summaries = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".summary.json")) {
            let s: SummaryFile = serde_json::from_str(&fs::read_to_string(&path)?)?;
            summaries.push(s);
        }
    }
    if summaries.is_empty() {
        return Err(DeupError::Validation(format!("no *.summary.json traces in {}", dir.display())));
    }
    summaries.sort_by(|a, b| (a.summary.mode.name(), a.summary.seed).cmp(&(b.summary.mode.name(), b.summary.seed)));
    let oracle = &summaries[0].summary.oracle;
    if let Some(other) = summaries.iter().find(|s| &s.summary.oracle != oracle) {
        return Err(DeupError::Validation(format!(
            "traces mix oracles `{oracle}` and `{}`; report one oracle per directory",
            other.summary.oracle
        )));
    }
    let mut curves: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for s in &summaries {
        let rows = read_trace_csv(dir.join(&s.trace_file))?;
        let init_best = rows.iter().filter(|r| r.step == 0).map(|r| r.y).fold(f64::NEG_INFINITY, f64::max);
        let curve: Vec<f64> = std::iter::once(init_best).chain(rows.iter().filter(|r| r.step > 0).map(|r| r.best)).collect();
        curves.entry(s.summary.mode.name().to_string()).or_default().push(curve);
    }
    let mut out = Vec::new();
    for (mode, runs) in curves {
        let len = runs.iter().map(Vec::len).max().unwrap_or(0);
        for step in 0..len {
            // Truncated (incomplete) runs carry their last value forward.
            let vals: Vec<f64> = runs.iter().map(|c| c[step.min(c.len() - 1)]).collect();
            out.push(ReportRow { mode: mode.clone(), step, mean_best: mean(&vals), se_best: standard_error(&vals), n_runs: vals.len() });
        }
    }
    Ok(out)
}

pub fn write_report_csv(rows: &[ReportRow], mut w: impl Write) -> Result<()> {
    writeln!(w, "mode,step,mean_best,se_best,n_runs")?;
    for r in rows {
        writeln!(w, "{},{},{:?},{:?},{}", r.mode, r.step, r.mean_best, r.se_best, r.n_runs)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::AcquisitionSpec;

    fn quick(kind: AcquisitionKind, budget: usize) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::for_oracle("synth1d", 1).unwrap();
        cfg.n_init = 6;
        cfg.budget = budget;
        cfg.acquisition = AcquisitionSpec { n_candidates: 128, ..AcquisitionSpec::new(kind) };
        cfg.gp.restarts = 2;
        cfg.error_gp_restarts = 2;
        cfg
    }

    #[test]
    fn random_run_bookkeeping() {
        let cfg = ExperimentConfig { oracle_name: "levi13".into(), dimension: 2, ..quick(AcquisitionKind::Random, 56) };
        let t = run_smo(&cfg).unwrap();
        assert_eq!(t.records.len(), 50);
        assert_eq!(t.summary.evaluations, 56);
        assert!(t.summary.complete);
        let curve = t.best_curve();
        assert!(curve.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*curve.last().unwrap(), t.summary.best_value);
    }

    #[test]
    fn running_best_example() {
        assert_eq!(running_best(0.0, &[1.0, 3.0, 2.0]), vec![1.0, 3.0, 3.0]);
    }

    #[test]
    fn modes_share_initial_design() {
        let a = run_smo(&quick(AcquisitionKind::Ei, 8)).unwrap();
        let b = run_smo(&quick(AcquisitionKind::DeupEi, 8)).unwrap();
        assert_eq!(a.init, b.init);
        assert_eq!(a.records.len(), 2);
        assert_eq!(b.records.len(), 2);
    }

    #[test]
    fn reruns_are_identical() {
        let cfg = quick(AcquisitionKind::DeupEi, 9);
        assert!(run_smo(&cfg).unwrap().same_outcome(&run_smo(&cfg).unwrap()));
    }

    #[test]
    fn steps_to_reach_counts_acquisitions() {
        let t = run_smo(&quick(AcquisitionKind::Random, 10)).unwrap();
        assert_eq!(steps_to_reach(&t, f64::NEG_INFINITY), Some(0));
        assert_eq!(steps_to_reach(&t, 2.0), None);
    }

    #[test]
    fn replicate_mode_counts_every_query() {
        let mut cfg = quick(AcquisitionKind::DeupEi, 9);
        cfg.noise = crate::benchmarks::NoiseProfile::Constant(0.05);
        cfg.aleatoric_mode = AleatoricMode::Replicates;
        cfg.replicates = 3;
        let t = run_smo(&cfg).unwrap();
        assert!(t.summary.complete, "{:?}", t.summary.failure);
        assert_eq!(t.init.len(), 6);
        assert_eq!(t.records.len(), 3);
        assert_eq!(t.summary.evaluations, 9);
    }

    #[test]
    fn trace_csv_round_trip_and_report() {
        let dir = tempfile::tempdir().unwrap();
        for seed in [1, 2, 3] {
            let t = run_smo(&ExperimentConfig { seed, ..quick(AcquisitionKind::Random, 10) }).unwrap();
            let (csv, _) = write_run(&t, dir.path()).unwrap();
            let rows = read_trace_csv(&csv).unwrap();
            assert_eq!(rows.len(), 10);
            assert_eq!(rows.iter().filter(|r| r.step == 0).count(), 6);
            assert_eq!(rows.last().unwrap().best, t.summary.best_value);
        }
        let report = report_traces(dir.path()).unwrap();
        assert_eq!(report.len(), 10 - 6 + 1);
        assert!(report.iter().all(|r| r.n_runs == 3 && r.mode == "RANDOM"));

        let t = run_smo(&ExperimentConfig { oracle_name: "levi13".into(), dimension: 2, ..quick(AcquisitionKind::Random, 8) })
            .unwrap();
        write_run(&t, dir.path()).unwrap();
        assert!(matches!(report_traces(dir.path()), Err(DeupError::Validation(_))));
    }

    #[test]
    fn single_seed_report_has_zero_se() {
        let dir = tempfile::tempdir().unwrap();
        write_run(&run_smo(&quick(AcquisitionKind::Random, 8)).unwrap(), dir.path()).unwrap();
        let report = report_traces(dir.path()).unwrap();
        assert!(report.iter().all(|r| r.se_best == 0.0));
    }
}
