// Fit an exact GP to a noisy sine and look at the posterior on and off the data.

use deup::models::{GpConfig, GpPredictor};
use deup::rng::RngStream;
use rand_distr::{Distribution, Normal};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = RngStream::new(7, "gp-example");
    let noise = Normal::new(0.0, 0.05)?;
    let xs: Vec<Vec<f64>> = (0..15).map(|i| vec![i as f64 / 14.0 * 3.0]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x[0].sin() + noise.sample(&mut rng)).collect();

    let gp = GpPredictor::fit(&xs, &ys, &GpConfig::default(), &mut rng)?;
    println!(
        "lengthscale {:.3}  signal var {:.3}  noise var {:.2e}  lml {:.2}",
        gp.lengthscale(),
        gp.signal_variance(),
        gp.noise_variance(),
        gp.log_marginal_likelihood()
    );
    for x in [0.5, 1.5, 2.9, 5.0] {
        let (m, v) = gp.posterior(&[x])?;
        println!("x={x:.1}  mean {m:+.3}  std {:.3}  truth {:+.3}", v.sqrt(), x.sin());
    }
    let (_, inside) = gp.posterior(&[1.5])?;
    let (_, outside) = gp.posterior(&[5.0])?;
    assert!(outside > inside);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
