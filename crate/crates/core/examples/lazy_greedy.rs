//! Lazy and naive greedy on the same weighted facility-location instance:
//! identical picks, far fewer gain evaluations.

use std::time::Instant;

use subzerocore::density::{density_scores, knn_radii};
use subzerocore::synthetic::normal_cloud;
use subzerocore::{
    greedy_lazy, greedy_naive, pairwise_distances, pairwise_similarities, Kernel,
    WeightedFlInstance,
};

fn main() -> subzerocore::Result<()> {
    let rows = normal_cloud(1500, 64, 3);
    let dist = pairwise_distances(rows.view())?;
    let sim = pairwise_similarities(rows.view(), Kernel::ShiftedCosine)?;
    let (_, scores) = density_scores(&knn_radii(&dist, 9)?)?;
    let instance = WeightedFlInstance::new(sim, scores.scores)?;
    let budget = 150;

    let start = Instant::now();
    let naive = greedy_naive(&instance, budget)?;
    let naive_time = start.elapsed();
    let start = Instant::now();
    let lazy = greedy_lazy(&instance, budget)?;
    let lazy_time = start.elapsed();

    println!(
        "naive: {:>8} evaluations in {naive_time:.2?}",
        naive.evaluations
    );
    println!(
        "lazy:  {:>8} evaluations in {lazy_time:.2?}",
        lazy.evaluations
    );
    println!(
        "objective {:.6}, identical selection: {}",
        lazy.objective,
        lazy.same_selection(&naive)
    );
    Ok(())
}
