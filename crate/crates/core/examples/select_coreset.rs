//! Selects a SubZeroCore coreset from a seeded Gaussian mixture and prints
//! what was resolved for each class.
//!
//! ```text
//! cargo run --release --example select_coreset -- 0.9
//! ```

use subzerocore::io::ResultDocument;
use subzerocore::synthetic::{gaussian_mixture, MixtureSpec};
use subzerocore::{select_subzerocore, Method, SelectionConfig};

fn main() -> subzerocore::Result<()> {
    let alpha: f64 = std::env::args()
        .nth(1)
        .map_or(Ok(0.9), |a| a.parse())
        .expect("alpha");
    let set = gaussian_mixture(&MixtureSpec::BENCHMARK)?;
    let config = SelectionConfig::new(alpha, Method::Subzerocore);
    let result = select_subzerocore(&set, &config)?;

    println!("class  budget    K       mu    sigma  coverage");
    for c in &result.per_class {
        println!(
            "{:>5} {:>7} {:>4} {:>8.4} {:>8.4} {:>9.4}",
            c.class,
            c.budget,
            c.k.unwrap_or(0),
            c.mu.unwrap_or(f64::NAN),
            c.sigma.unwrap_or(f64::NAN),
            c.empirical_coverage.unwrap_or(f64::NAN),
        );
    }
    println!(
        "selected {} of {} (target {:.1})",
        result.totals.selected,
        set.len(),
        result.totals.target
    );

    let doc = ResultDocument::from_result(&result, true).to_json()?;
    println!(
        "result document: {} bytes, first class picks {:?}",
        doc.len(),
        &result.per_class[0].selected_ids[..5]
    );
    Ok(())
}
