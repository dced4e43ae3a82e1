//! Command-line front end shared by the `deup` binary and the tests.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, ExperimentConfig};
use crate::data::InputPoint;
use crate::error::{argument, DeupError, Result};
use crate::fig1::run_fig1;
use crate::rng::RngStream;
use crate::smo::{fit_uncertainty, report_traces, run_seeds, stem_for, write_report_csv, write_run};
use crate::theory::{run_theory_suite, SuiteSize};

pub const THREADS_ENV: &str = "DEUP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "deup", version, about = "Direct epistemic uncertainty prediction toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run sequential optimization for every seed and write traces.
    RunSmo(RunSmoArgs),
    /// Write the one-dimensional recalibration grid for each seed.
    DemoFig1(SeededOut),
    /// Run the decomposition checks and write a pass/fail table.
    CheckTheory(SeededOut),
    /// Fit the uncertainty model on a config's initial design.
    FitUncertainty(FitArgs),
    /// Aggregate traces into per-mode best-so-far curves.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunSmoArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated seeds; defaults to the config seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SeededOut {
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
    /// Number of uniform query points in the predictions file.
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory holding `*.summary.json` and trace files.
    pub traces: PathBuf,
    /// Where to write `report.csv`; defaults to the traces directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

/// Caps the rayon pool at `DEUP_THREADS` when it is set.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| argument(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    // A pool built earlier in the process (tests) is kept.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn prepare(out: &OutArgs, files: &[PathBuf]) -> Result<()> {
    fs::create_dir_all(&out.out)?;
    if !out.force {
        if let Some(p) = files.iter().find(|p| p.exists()) {
            return Err(argument(format!("refusing to overwrite {} (pass --force)", p.display())));
        }
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Executes one command and returns the files it wrote.
pub fn run(command: &Command) -> Result<Vec<PathBuf>> {
    match command {
        Command::RunSmo(a) => run_smo_cmd(a),
        Command::DemoFig1(a) => demo_fig1(&a.seeds, &a.out),
        Command::CheckTheory(a) => check_theory(&a.seeds, &a.out),
        Command::FitUncertainty(a) => fit_cmd(a),
        Command::Report(a) => report_cmd(a),
    }
}

fn seeded(cfg: &ExperimentConfig, seeds: &[u64]) -> Vec<u64> {
    if seeds.is_empty() {
        vec![cfg.seed]
    } else {
        seeds.to_vec()
    }
}

fn run_smo_cmd(a: &RunSmoArgs) -> Result<Vec<PathBuf>> {
    let cfg = load_config(&a.config)?;
    let seeds = seeded(&cfg, &a.seeds);
    let oracle = cfg.oracle()?;
    let planned: Vec<PathBuf> = seeds
        .iter()
        .flat_map(|s| {
            let stem = stem_for(oracle.name(), cfg.acquisition.kind, *s);
            [".trace.csv", ".summary.json"].map(|ext| a.out.out.join(format!("{stem}{ext}")))
        })
        .collect();
    prepare(&a.out, &planned)?;
    let traces = run_seeds(&cfg, &seeds)?;
    let mut written = Vec::new();
    for t in &traces {
        let (csv, json) = write_run(t, &a.out.out)?;
        written.extend([csv, json]);
    }
    if let Some(t) = traces.iter().find(|t| !t.summary.complete) {
        return Err(DeupError::Numeric(format!(
            "seed {} stopped early: {}",
            t.summary.seed,
            t.summary.failure.as_deref().unwrap_or("unknown failure")
        )));
    }
    Ok(written)
}

/// Writes `fig1_seed{s}.csv` for every seed plus `fig1_summary.csv` with
/// the gap-region rank correlations.
pub fn demo_fig1(seeds: &[u64], out: &OutArgs) -> Result<Vec<PathBuf>> {
    let mut planned: Vec<PathBuf> = seeds.iter().map(|s| out.out.join(format!("fig1_seed{s}.csv"))).collect();
    let summary = out.out.join("fig1_summary.csv");
    planned.push(summary.clone());
    prepare(out, &planned)?;
    let mut lines = vec!["seed,gap_spearman_deup,gap_spearman_gp2".to_string()];
    for (s, path) in seeds.iter().zip(&planned) {
        let r = run_fig1(*s)?;
        let mut buf = Vec::new();
        r.write_csv(&mut buf)?;
        fs::write(path, buf)?;
        lines.push(format!("{s},{},{}", r.gap_spearman_deup, r.gap_spearman_gp2));
    }
    fs::write(&summary, lines.join("\n") + "\n")?;
    Ok(planned)
}

/// Prints the theory table for each seed and writes `theory.txt` and
/// `theory.json`. Fails after writing if any check failed.
pub fn check_theory(seeds: &[u64], out: &OutArgs) -> Result<Vec<PathBuf>> {
    let txt = out.out.join("theory.txt");
    let json = out.out.join("theory.json");
    prepare(out, &[txt.clone(), json.clone()])?;
    let mut text = String::new();
    let mut suites = Vec::new();
    for &s in seeds {
        let suite = run_theory_suite(s, SuiteSize::default())?;
        text += &format!("seed {s}\n{}", suite.table());
        suites.push((s, suite));
    }
    print!("{text}");
    fs::write(&txt, &text)?;
    write_json(&json, &suites)?;
    if suites.iter().any(|(_, s)| !s.all_passed()) {
        return Err(DeupError::Validation("theory checks failed".into()));
    }
    Ok(vec![txt, json])
}

fn fit_cmd(a: &FitArgs) -> Result<Vec<PathBuf>> {
    let mut cfg = load_config(&a.config)?;
    if let Some(s) = a.seeds.first() {
        cfg.seed = *s;
    }
    if a.seeds.len() > 1 {
        return Err(argument("fit-uncertainty takes a single seed"));
    }
    let data = a.out.out.join("error_data.csv");
    let preds = a.out.out.join("predictions.csv");
    let state_file = a.out.out.join("state.json");
    prepare(&a.out, &[data.clone(), preds.clone(), state_file.clone()])?;
    let state = fit_uncertainty(&cfg)?;

    let mut buf = Vec::new();
    state.error_data().write_csv(&mut buf)?;
    fs::write(&data, buf)?;

    let oracle = cfg.oracle()?;
    let model = state.model();
    let mut rng = RngStream::new(cfg.seed, "fit-uncertainty/queries");
    let mut header: Vec<String> = (0..cfg.dimension).map(|j| format!("x_{j}")).collect();
    header.extend(["f_true", "mean", "total", "aleatoric", "epistemic"].map(String::from));
    let mut lines = vec![header.join(",")];
    for _ in 0..a.points {
        let x: InputPoint = oracle.domain().sample_point(&mut rng);
        let mut cells: Vec<String> = x.coords().iter().map(f64::to_string).collect();
        cells.push(oracle.value(x.coords()).to_string());
        cells.push(model.mean(x.coords()).to_string());
        cells.push(model.total_uncertainty(&x).to_string());
        cells.push(model.aleatoric.predict(x.coords()).to_string());
        cells.push(model.epistemic(&x).to_string());
        lines.push(cells.join(","));
    }
    fs::write(&preds, lines.join("\n") + "\n")?;
    write_json(&state_file, &state)?;
    Ok(vec![data, preds, state_file])
}

fn report_cmd(a: &ReportArgs) -> Result<Vec<PathBuf>> {
    let dir = a.out.clone().unwrap_or_else(|| a.traces.clone());
    let path = dir.join("report.csv");
    prepare(&OutArgs { out: dir, force: a.force }, std::slice::from_ref(&path))?;
    let rows = report_traces(&a.traces)?;
    let mut buf = Vec::new();
    write_report_csv(&rows, &mut buf)?;
    fs::write(&path, buf)?;
    Ok(vec![path])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("deup").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn parses_subcommands() {
        match parse(&["run-smo", "--config", "a.toml", "--seeds", "1,2,3", "--out", "o"]).command {
            Command::RunSmo(a) => {
                assert_eq!(a.seeds, vec![1, 2, 3]);
                assert!(!a.out.force);
            }
            other => panic!("{other:?}"),
        }
        match parse(&["demo-fig1", "--out", "o", "--force"]).command {
            Command::DemoFig1(a) => assert!(a.out.force && a.seeds == vec![0]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse(&["report", "dir"]).command, Command::Report(_)));
        assert!(Cli::try_parse_from(["deup", "run-smo", "--out", "o"]).is_err());
    }

    #[test]
    fn fig1_refuses_overwrite_without_force() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutArgs { out: dir.path().join("fig"), force: false };
        let files = demo_fig1(&[1], &out).unwrap();
        assert!(files.iter().all(|p| p.exists()));
        let err = demo_fig1(&[1], &out).unwrap_err();
        assert!(err.to_string().contains("--force"), "{err}");
        demo_fig1(&[1], &OutArgs { force: true, ..out }).unwrap();
    }
}
