// Grow a DEUP state one acquisition at a time. Each step adds an
// out-of-sample error row before the refit and an in-sample row after it.

use deup::data::{Dataset, InputPoint};
use deup::deup::{deup_pretrain_cv, AleatoricSpec, DeupSettings, DeupState, FeatureLayout, FeatureSpec};
use deup::models::{GpConfig, Learner};
use deup::rng::RngStream;

fn f(x: f64) -> f64 {
    (3.0 * x).cos() * x
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let xs: Vec<Vec<f64>> = [0.1, 0.4, 0.9, 1.3, 1.8, 2.2].iter().map(|x| vec![*x]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| f(x[0])).collect();
    let d = Dataset::from_xy(&xs, &ys)?;

    let settings = DeupSettings::new(Learner::Gp(GpConfig::default()), FeatureSpec::new(FeatureLayout::variance_only()));
    let root = RngStream::new(5, "interactive-example");
    let du = deup_pretrain_cv(&d, 2, 4 * d.len(), &settings, &root.substream("pretrain"))?;
    println!("pretraining rows: {}", du.len());
    let mut state = DeupState::new(d, du, settings, AleatoricSpec::Zero, &root.substream("state"))?;

    for x in [2.6, 3.0, 0.6] {
        let before = state.error_data().len();
        let p = InputPoint::scalar(x)?;
        let eu = state.model().epistemic(&p);
        state.step(p.clone(), f(x))?;
        println!(
            "acquire x={x:.1}: predicted eu {eu:.3e} -> {:.3e} after, rows {before} -> {}",
            state.model().epistemic(&p),
            state.error_data().len()
        );
        assert_eq!(state.error_data().len(), before + 2);
    }
    println!("steps taken: {}", state.steps());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
