//! Coverage of a selection over K-neighborhoods, its closed-form expectation
//! under uniformly random selection, and the inversion from a coverage target
//! to a neighborhood size K.
//!
//! A K-neighborhood here is the closed ball around a point that holds its K
//! nearest points of the ground set, the point itself counted first. With
//! that convention a uniformly random `s`-subset misses a given neighborhood
//! with probability `C(n-K, s) / C(n, s)`, which is exactly what
//! [`expected_coverage`] evaluates. [`mc_expected_coverage`] checks the two
//! against each other on concrete point clouds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::density::knn_radii;
use crate::error::{invalid, Error, Result};
use crate::similarity::{pairwise_distances, DistanceMatrix};

/// A neighborhood size resolved from a coverage target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveragePlan {
    pub n: usize,
    pub s: usize,
    pub gamma: f64,
    pub k: usize,
    /// Closed-form expected coverage at `k`.
    pub achieved: f64,
    /// Set when the search stopped at the upper bound without reaching `gamma`.
    pub capped: bool,
}

/// Expected coverage of a uniformly random `s`-subset of `n` points with
/// K-neighborhoods of size `k`: `1 - prod_{j<k} (n-s-j)/(n-j)`.
pub fn expected_coverage(n: usize, s: usize, k: usize) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("n must be at least 2, got {n}")));
    }
    if s == 0 || s > n {
        return Err(invalid(format!("s must be in 1..={n}, got {s}")));
    }
    if k == 0 || k >= n {
        return Err(invalid(format!("k must be in 1..={}, got {k}", n - 1)));
    }
    Ok(miss_product(n, s, k).map_or(1.0, |p| 1.0 - p))
}

/// `prod_{j<k} (n-s-j)/(n-j)`, or `None` once a factor hits zero.
fn miss_product(n: usize, s: usize, k: usize) -> Option<f64> {
    if s + k > n {
        return None;
    }
    let mut p = 1.0;
    for j in 0..k {
        p *= (n - s - j) as f64 / (n - j) as f64;
    }
    Some(p)
}

/// Slack below `gamma` still treated as reaching it.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Smallest `k >= 1` whose expected coverage reaches `gamma`.
///
/// The search is bounded by `n - s - 1`. For `s = n - 1` that bound is empty,
/// so the search runs up to the first `k` at which coverage saturates at 1
/// (`k = 2`, or `n - 1` if smaller).
///
/// An exact tie with `gamma` counts as reaching it; the running product is
/// only accurate to a few ulps, so ties are detected within [`TIE_TOLERANCE`].
pub fn find_k_for_coverage(n: usize, s: usize, gamma: f64) -> Result<CoveragePlan> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("gamma must be in (0, 1), got {gamma}")));
    }
    if n < 2 || s == 0 || s >= n {
        return Err(Error::CoresetTooLarge { n, s });
    }
    let cap = if n - s >= 2 { n - s - 1 } else { 2.min(n - 1) };

    // running product, one factor per step
    let mut miss = 1.0;
    let mut k = 0;
    let mut achieved = 0.0;
    while k < cap {
        let num = (n - s).saturating_sub(k);
        miss *= num as f64 / (n - k) as f64;
        k += 1;
        achieved = 1.0 - miss;
        if achieved >= gamma - TIE_TOLERANCE {
            break;
        }
    }
    Ok(CoveragePlan {
        n,
        s,
        gamma,
        k,
        achieved,
        capped: achieved < gamma - TIE_TOLERANCE,
    })
}

/// Per-row radius of the K-neighborhood (self counted as the first of the
/// K points).
pub fn neighborhood_radii(dist: &DistanceMatrix, k: usize) -> Result<Vec<f64>> {
    let n = dist.len();
    if k == 0 || k >= n.max(2) {
        return Err(invalid(format!(
            "k must be in 1..={}, got {k}",
            n.saturating_sub(1)
        )));
    }
    if k == 1 {
        return Ok(vec![0.0; n]);
    }
    Ok(knn_radii(dist, k - 1)?.radii)
}

/// Fraction of rows whose K-neighborhood contains at least one selected row.
pub fn empirical_coverage(dist: &DistanceMatrix, selected: &[usize], k: usize) -> Result<f64> {
    let n = dist.len();
    if selected.is_empty() {
        return Err(Error::Empty("selection"));
    }
    if let Some(&index) = selected.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index, len: n });
    }
    let radii = neighborhood_radii(dist, k)?;
    let covered = radii
        .par_iter()
        .enumerate()
        .filter(|&(x, &r)| selected.iter().any(|&j| dist.get(x, j) <= r))
        .count();
    Ok(covered as f64 / n as f64)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Estimates the expected coverage on a seeded uniform point cloud in the
/// unit square.
pub fn mc_expected_coverage(
    n: usize,
    s: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    let cloud = uniform_cloud(n, 2, seed);
    let dist = pairwise_distances(cloud.view())?;
    mc_expected_coverage_on(&dist, s, k, trials, seed)
}

/// Seeded i.i.d. uniform points in `[0, 1)^d`.
pub fn uniform_cloud(n: usize, d: usize, seed: u64) -> ndarray::Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ndarray::Array2::from_shape_simple_fn((n, d), || rng.random::<f64>())
}

/// Averages [`empirical_coverage`] over `trials` uniform `s`-subsets of the
/// rows of `dist`. Trial `t` draws from its own stream of `seed`, so the
/// estimate does not depend on the number of workers.
pub fn mc_expected_coverage_on(
    dist: &DistanceMatrix,
    s: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    let n = dist.len();
    if trials == 0 {
        return Err(invalid("trials must be at least 1"));
    }
    if s == 0 || s > n {
        return Err(invalid(format!("s must be in 1..={n}, got {s}")));
    }
    let radii = neighborhood_radii(dist, k)?;
    // members of each neighborhood, so a trial costs O(sum of ball sizes)
    let balls: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|x| {
            dist.row(x)
                .iter()
                .enumerate()
                .filter(|&(_, &v)| v <= radii[x])
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map_init(
            || vec![false; n],
            |mask, t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let picked = rand::seq::index::sample(&mut rng, n, s);
                for j in picked.iter() {
                    mask[j] = true;
                }
                let covered = balls.iter().filter(|b| b.iter().any(|&j| mask[j])).count();
                for j in picked.iter() {
                    mask[j] = false;
                }
                covered as f64 / n as f64
            },
        )
        .collect();

    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let stderr = if samples.len() > 1 {
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        stderr,
        trials,
    })
}
