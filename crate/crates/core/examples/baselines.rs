//! Runs every method on the pinned mixture and prints the coverage and
//! timing tables.
//!
//! ```text
//! cargo run --release --example baselines
//! ```

use subzerocore::bench::{run_bench, BenchConfig};

fn main() -> subzerocore::Result<()> {
    let report = run_bench(&BenchConfig::coverage_benchmark())?;
    print!("{}", report.coverage_table());
    println!();
    print!("{}", report.timing_table());
    Ok(())
}
