// Train an error predictor on held-out errors of a GP and compare its
// epistemic estimates with the actual squared errors on a grid.

use deup::data::{Dataset, InputPoint};
use deup::deup::{deup_fixed_train, AleatoricEstimator, DeupSettings, FeatureLayout, FeatureSpec};
use deup::models::{GpConfig, Learner};
use deup::rng::RngStream;
use deup::stats::spearman;
use rand::Rng;

fn f(x: f64) -> f64 {
    (4.0 * x).sin() + 0.3 * x * x
}

fn sample(rng: &mut RngStream, n: usize, lo: f64, hi: f64) -> Result<Dataset, deup::DeupError> {
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(lo..hi)]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| f(x[0])).collect();
    Dataset::from_xy(&xs, &ys)
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = RngStream::new(3, "fixed-example");
    let train = sample(&mut rng, 12, -1.0, 1.0)?;
    let held_out = sample(&mut rng, 12, -3.0, 3.0)?;

    let settings = DeupSettings::new(Learner::Gp(GpConfig::default()), FeatureSpec::new(FeatureLayout::variance_only()));
    let fitted = deup_fixed_train(&train, &held_out, &settings, AleatoricEstimator::zero(), &rng.substream("deup"))?;
    println!("error rows: {}", fitted.error_data.len());

    let mut eu = Vec::new();
    let mut err = Vec::new();
    for i in 0..=60 {
        let x = -3.0 + i as f64 * 0.1;
        let p = InputPoint::scalar(x)?;
        eu.push(fitted.model.epistemic(&p));
        err.push((fitted.model.mean(&[x]) - f(x)).powi(2));
        if i % 10 == 0 {
            println!("x={x:+.1}  predicted {:.3e}  actual {:.3e}", eu[i], err[i]);
        }
    }
    let rho = spearman(&eu, &err);
    println!("spearman(predicted, actual) = {rho:.3}");
    assert!(rho > 0.5);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
