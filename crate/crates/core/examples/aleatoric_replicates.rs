// Estimate noise variance from repeated oracle queries at the same input.

use deup::benchmarks::{NoiseProfile, Oracle};
use deup::data::{Dataset, LabeledExample};
use deup::deup::{estimate_aleatoric_from_replicates, replicate_groups, replicate_target};
use deup::models::{GpConfig, Learner};
use deup::rng::RngStream;
use deup::stats::mean;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let oracle = Oracle::synth1d().with_noise(NoiseProfile::Constant(0.5))?;
    let mut design = RngStream::new(2, "replicate-design");
    let mut noise = RngStream::new(2, "replicate-noise");
    let mut d = Dataset::new();
    for g in 0..40u64 {
        let x = oracle.domain().sample_point(&mut design);
        for y in oracle.sample(&x, &mut noise, 5)? {
            d.push(LabeledExample::new(x.clone(), y)?.with_replicate(g))?;
        }
    }
    let groups = replicate_groups(&d);
    let targets = groups.iter().map(|g| replicate_target(&g.outcomes)).collect::<Result<Vec<_>, _>>()?;
    println!("{} groups, mean replicate target {:.4} (true 0.25)", groups.len(), mean(&targets));

    let a = estimate_aleatoric_from_replicates(&groups, &Learner::Gp(GpConfig::default()), &mut RngStream::new(2, "fit"))?;
    for x in [0.1, 0.5, 0.9] {
        println!("a({x}) = {:.4}", a.predict(&[x]));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
