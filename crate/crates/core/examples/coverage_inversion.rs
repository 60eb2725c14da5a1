//! Resolves the neighborhood size K from a coverage target and checks the
//! closed form against random subsets of a point cloud.

use subzerocore::coverage::mc_expected_coverage;
use subzerocore::{expected_coverage, find_k_for_coverage};

fn main() -> subzerocore::Result<()> {
    let n = 5000;
    let gamma = 0.6;
    println!("n={n} gamma={gamma}");
    for alpha in [0.7, 0.9, 0.95, 0.99] {
        let s = ((1.0 - alpha) * n as f64).round() as usize;
        let plan = find_k_for_coverage(n, s, gamma)?;
        println!(
            "alpha={alpha:<5} s={s:<5} K={:<4} expected coverage {:.4}",
            plan.k, plan.achieved
        );
    }

    println!("\ncoverage curve, n=200 s=20");
    for k in [1, 2, 4, 8, 16, 32] {
        println!("K={k:<3} {:.4}", expected_coverage(200, 20, k)?);
    }

    let plan = find_k_for_coverage(200, 20, gamma)?;
    let mc = mc_expected_coverage(200, 20, plan.k, 20_000, 7)?;
    println!(
        "\nK={}: closed form {:.4}, Monte-Carlo {:.4} +- {:.4} over {} subsets",
        plan.k, plan.achieved, mc.mean, mc.stderr, mc.trials
    );
    Ok(())
}
