// Closed-form and Monte-Carlo checks of the squared-loss and log-loss splits.

use deup::theory::{check_nll_decomposition, gaussian_kl, kl_shift_residual, run_theory_suite, GaussianPair, SuiteSize};
use deup::rng::RngStream;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let pair = GaussianPair::new(0.0, 1.0, 1.0, 1.5)?;
    println!("KL = {:.6}, shift residual = {:.2e}", gaussian_kl(&pair), kl_shift_residual(&pair));

    let r = check_nll_decomposition(&pair, 50_000, &mut RngStream::new(0, "theory-example"))?;
    println!(
        "cross-entropy {:.4} ± {:.4}, entropy {:.4}, epistemic {:.4}, gap {:+.4}",
        r.total.mean, r.total.se, r.aleatoric, r.epistemic, r.gap
    );

    let size = SuiteSize { kl_pairs: 1000, squared_configs: 10, squared_draws: 20_000, nll_pairs: 5, nll_draws: 20_000 };
    let suite = run_theory_suite(0, size)?;
    print!("{}", suite.table());
    assert!(suite.all_passed());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
