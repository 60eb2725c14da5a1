//! K-nearest-neighbor radii, the ball-count density in log space, and the
//! Gaussian density scores used as facility-location weights.

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::similarity::DistanceMatrix;

/// Per-row distance to the K-th nearest other row.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusVector {
    pub radii: Vec<f64>,
    pub k: usize,
}

/// Population mean and standard deviation of a radius vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityStats {
    pub mu: f64,
    pub sigma: f64,
}

impl DensityStats {
    /// True when the spread is too small to carry density information; scores
    /// then fall back to uniform 1.
    pub fn is_degenerate(&self) -> bool {
        self.sigma < 1e-12 * self.mu.max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityScores {
    pub scores: Vec<f64>,
}

/// Log of the ball-count density, or infinite density for a zero radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogDensity {
    Finite(f64),
    Infinite,
}

/// Up to this K the radii come from a bounded insertion buffer instead of a
/// full selection over a copied row.
const SMALL_K: usize = 64;

/// `k`-th smallest value of `values` (at least `k` of them), keeping the `k`
/// smallest seen so far sorted in `buf`.
fn kth_smallest_insertion(values: impl Iterator<Item = f64>, k: usize, buf: &mut Vec<f64>) -> f64 {
    buf.clear();
    for v in values {
        if buf.len() < k {
            let at = buf.partition_point(|&b| b.total_cmp(&v).is_le());
            buf.insert(at, v);
        } else if v.total_cmp(&buf[k - 1]).is_lt() {
            let at = buf.partition_point(|&b| b.total_cmp(&v).is_le());
            buf.pop();
            buf.insert(at, v);
        }
    }
    buf[k - 1]
}

/// `k`-th smallest distance from each row to the other `n - 1` rows.
///
/// The query row itself is excluded by index, so exact duplicates count as
/// neighbors at distance zero.
pub fn knn_radii(dist: &DistanceMatrix, k: usize) -> Result<RadiusVector> {
    let n = dist.len();
    if k == 0 || k >= n {
        return Err(invalid(format!(
            "k must be in 1..={} for {n} rows, got {k}",
            n.saturating_sub(1)
        )));
    }
    let radii = (0..n)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n - 1),
            |scratch, i| {
                let others = dist
                    .row(i)
                    .into_iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &v)| v);
                if k <= SMALL_K {
                    kth_smallest_insertion(others, k, scratch)
                } else {
                    scratch.clear();
                    scratch.extend(others);
                    *scratch.select_nth_unstable_by(k - 1, f64::total_cmp).1
                }
            },
        )
        .collect();
    Ok(RadiusVector { radii, k })
}

/// Number of rows inside the closed ball of radius `r` around row `i`,
/// including `i` itself.
pub fn ball_count(dist: &DistanceMatrix, i: usize, r: f64) -> usize {
    dist.row(i).iter().filter(|&&v| v <= r).count()
}

/// `ln(count / Vol_d(r))` with the d-ball volume `pi^(d/2) r^d / Gamma(d/2 + 1)`,
/// evaluated entirely in log space.
pub fn log_density(count: usize, r: f64, d: usize) -> Result<LogDensity> {
    if count == 0 {
        return Err(invalid("ball count must be at least 1"));
    }
    if d == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(invalid("radius must be finite and non-negative"));
    }
    if r == 0.0 {
        return Ok(LogDensity::Infinite);
    }
    let half_d = d as f64 / 2.0;
    let ln_volume = half_d * std::f64::consts::PI.ln() - ln_gamma(half_d + 1.0) + d as f64 * r.ln();
    Ok(LogDensity::Finite((count as f64).ln() - ln_volume))
}

/// Gaussian scores `exp(-(r_i - mu)^2 / (2 sigma^2))` over the radius distribution.
///
/// Degenerate spreads give all-ones scores. Scores are floored at the
/// smallest positive normal `f64` so they stay strictly positive even for
/// extreme outliers in very large classes.
pub fn density_scores(radii: &RadiusVector) -> Result<(DensityStats, DensityScores)> {
    let r = &radii.radii;
    if r.is_empty() {
        return Err(crate::error::Error::Empty("radius vector"));
    }
    let n = r.len() as f64;
    let mu = r.iter().sum::<f64>() / n;
    let var = r.iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>() / n;
    let stats = DensityStats {
        mu,
        sigma: var.sqrt(),
    };
    let scores = if stats.is_degenerate() {
        vec![1.0; r.len()]
    } else {
        let denom = 2.0 * stats.sigma * stats.sigma;
        r.iter()
            .map(|&x| (-(x - mu) * (x - mu) / denom).exp().max(f64::MIN_POSITIVE))
            .collect()
    };
    Ok((stats, DensityScores { scores }))
}
