// Gaussian KDE with Silverman's bandwidth on a two-cluster sample.

use deup::density::{silverman_bandwidth, KdePredictor};
use deup::rng::RngStream;
use rand::Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = RngStream::new(1, "kde-example");
    let points: Vec<Vec<f64>> = (0..200)
        .map(|i| {
            let center = if i % 2 == 0 { -2.0 } else { 1.5 };
            vec![center + rng.gen_range(-0.5..0.5)]
        })
        .collect();
    println!("silverman bandwidth {:.4}", silverman_bandwidth(&points));

    let kde = KdePredictor::fit(points, None)?;
    let (lo, hi, n) = (-8.0, 8.0, 4000);
    let h = (hi - lo) / n as f64;
    let mut mass = 0.0;
    for i in 0..=n {
        let x = lo + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        mass += w * kde.log_density(&[x])?.exp() * h;
    }
    println!("integral over [{lo}, {hi}] = {mass:.5}");
    for x in [-2.0, 0.0, 1.5, 6.0] {
        println!("log p({x:+.1}) = {:.3}", kde.log_density(&[x])?);
    }
    assert!((mass - 1.0).abs() < 1e-3);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
