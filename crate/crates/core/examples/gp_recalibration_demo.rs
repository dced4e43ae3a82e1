// A GP trained on both ends of an interval underestimates its error in the
// middle. Compare the rank correlation with the true error of the learned
// error predictor and of a refitted GP's variance.

use deup::fig1::{run_fig1, GAP};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for seed in 0..2 {
        let r = run_fig1(seed)?;
        println!(
            "seed {seed}: acquired {:?}\n  gap spearman: deup {:.3}  refitted gp variance {:.3}",
            r.acquired_x.iter().map(|x| (x * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            r.gap_spearman_deup,
            r.gap_spearman_gp2
        );
        let worst = r.gap_rows().max_by(|a, b| a.true_sq_error.total_cmp(&b.true_sq_error)).expect("gap rows");
        println!(
            "  largest error in [{}, {}] at x={:.3}: sq error {:.3}, gp1 std {:.3}, deup eu {:.3}",
            GAP.0, GAP.1, worst.x, worst.true_sq_error, worst.gp1_std, worst.deup_eu
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
