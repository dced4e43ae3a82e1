// Short optimization runs on the 1-D multimodal benchmark: plain GP-EI
// against EI computed from the DEUP uncertainty. Both share one initial design.

use deup::acquisition::AcquisitionKind;
use deup::config::ExperimentConfig;
use deup::smo::{run_smo, steps_to_reach};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::for_oracle("synth1d", 1)?;
    cfg.n_init = 6;
    cfg.budget = 16;
    cfg.seed = 1;
    for kind in [AcquisitionKind::Ei, AcquisitionKind::DeupEi] {
        cfg.acquisition.kind = kind;
        let trace = run_smo(&cfg)?;
        let curve: Vec<String> = trace.best_curve().iter().map(|b| format!("{b:.3}")).collect();
        println!("{kind:>8}: best {:.4} at {:?}", trace.summary.best_value, trace.summary.best_x);
        println!("          curve {}", curve.join(" "));
        println!("          steps to 0.99: {:?}", steps_to_reach(&trace, 0.99));
        assert_eq!(trace.summary.evaluations, cfg.budget);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
