//! Training-free coreset selection.
//!
//! The main method, SubZeroCore, picks a per-class coreset by greedily
//! maximizing a facility-location objective whose candidates are weighted by
//! how typical their local density is. The single neighborhood-size
//! parameter K is not tuned by hand: it is the smallest K at which a
//! uniformly random coreset of the requested size would already reach a
//! target coverage `gamma`, which has a closed form in the class size and the
//! coreset size alone.
//!
//! Pipeline for one class of `n` rows and budget `s`:
//!
//! 1. [`coverage::find_k_for_coverage`] resolves K from `(n, s, gamma)`.
//! 2. [`density::knn_radii`] gives each row its K-th nearest-neighbor radius.
//! 3. [`density::density_scores`] turns radii into Gaussian weights in `(0, 1]`.
//! 4. [`submodular::greedy_lazy`] maximizes the weighted facility location.
//!
//! [`selectors`] wires this together per class, alongside plain facility
//! location, k-center greedy and random baselines. See the crate's `examples/`
//! directory for one runnable program per capability.

pub mod bench;
pub mod cli;
pub mod coverage;
pub mod density;
pub mod error;
pub mod io;
pub mod selectors;
pub mod similarity;
pub mod submodular;
pub mod synthetic;
pub mod types;

pub use coverage::{empirical_coverage, expected_coverage, find_k_for_coverage, CoveragePlan};
pub use error::{Error, Result};
pub use selectors::{
    select, select_facility_location, select_kcenter_greedy, select_random, select_subzerocore,
};
pub use similarity::{pairwise_distances, pairwise_similarities, DistanceMatrix, SimilarityMatrix};
pub use submodular::{greedy_lazy, greedy_naive, GreedyTrace, WeightedFlInstance};
pub use types::{
    compute_class_budgets, ClassResult, CoresetResult, EmbeddingSet, Kernel, Method,
    SelectionConfig, Threads,
};
