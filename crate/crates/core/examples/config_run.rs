// Drive a run from a config file, write its trace and summary, then
// aggregate the output directory into a report.

use deup::config::load_config;
use deup::smo::{report_traces, run_smo, write_report_csv, write_run};

const CONFIG: &str = "\
# two quick seeds of random search on Levi N.13
[oracle]
name = levi13
noise = constant
noise_std = 0.01

[smo]
acquisition = RANDOM
n_init = 4
budget = 12
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("levi.cfg");
    std::fs::write(&path, CONFIG)?;
    let mut cfg = load_config(&path)?;
    for seed in [0, 1] {
        cfg.seed = seed;
        let trace = run_smo(&cfg)?;
        let (csv, json) = write_run(&trace, dir.path())?;
        println!("seed {seed}: best {:.3}, wrote {} and {}", trace.summary.best_value, csv.display(), json.display());
    }
    let rows = report_traces(dir.path())?;
    let mut out = Vec::new();
    write_report_csv(&rows, &mut out)?;
    print!("{}", String::from_utf8(out)?);
    assert_eq!(rows.len(), cfg.budget - cfg.n_init + 1);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
