//! Seeded Gaussian-mixture embeddings for benchmarks, examples and tests.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::types::EmbeddingSet;

/// Mixture components of every class: (weight, spread).
///
/// Tight and loose clusters sit next to each other, plus a broad component
/// that produces sparse outliers.
const COMPONENTS: [(f64, f64); 5] = [
    (0.35, 0.15),
    (0.25, 0.25),
    (0.20, 0.40),
    (0.15, 0.60),
    (0.05, 1.20),
];

/// Spread of component centers around the class center.
const COMPONENT_OFFSET: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    pub seed: u64,
}

impl MixtureSpec {
    /// The pinned benchmark: 10 classes of 500 points in 32 dimensions.
    pub const BENCHMARK: MixtureSpec = MixtureSpec {
        classes: 10,
        per_class: 500,
        dim: 32,
        seed: 2024,
    };
}

/// Samples a class-major mixture: class `c` occupies rows
/// `c * per_class .. (c + 1) * per_class` and carries label `c`.
pub fn gaussian_mixture(spec: &MixtureSpec) -> Result<EmbeddingSet> {
    let MixtureSpec {
        classes,
        per_class,
        dim,
        seed,
    } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = move |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
    let mut rows = Array2::<f64>::zeros((classes * per_class, dim));
    let mut labels = Vec::with_capacity(classes * per_class);

    for c in 0..classes {
        let center: Vec<f64> = (0..dim).map(|_| normal(&mut rng)).collect();
        let components: Vec<(Vec<f64>, f64)> = COMPONENTS
            .iter()
            .map(|&(_, spread)| {
                let mean = center
                    .iter()
                    .map(|&m| m + COMPONENT_OFFSET * normal(&mut rng))
                    .collect();
                (mean, spread)
            })
            .collect();

        // deterministic component sizes, remainder to the first component
        let mut sizes: Vec<usize> = COMPONENTS
            .iter()
            .map(|&(w, _)| (w * per_class as f64).floor() as usize)
            .collect();
        sizes[0] += per_class - sizes.iter().sum::<usize>();
        let mut assignment: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(m, &count)| std::iter::repeat_n(m, count))
            .collect();
        assignment.shuffle(&mut rng);

        for (i, &m) in assignment.iter().enumerate() {
            let (mean, spread) = &components[m];
            let mut row = rows.row_mut(c * per_class + i);
            for (slot, &mu) in row.iter_mut().zip(mean) {
                *slot = mu + spread * normal(&mut rng);
            }
            labels.push(c as u32);
        }
    }
    EmbeddingSet::with_row_ids(rows, labels)
}

/// Seeded standard-normal cloud of `n` points in `d` dimensions.
pub fn normal_cloud(n: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_simple_fn((n, d), || StandardNormal.sample(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_shape_and_determinism() {
        let spec = MixtureSpec {
            classes: 3,
            per_class: 40,
            dim: 5,
            seed: 9,
        };
        let a = gaussian_mixture(&spec).unwrap();
        let b = gaussian_mixture(&spec).unwrap();
        assert_eq!(a.len(), 120);
        assert_eq!(a.dim(), 5);
        assert_eq!(a.num_classes(), 3);
        assert_eq!(a.vectors(), b.vectors());
        assert_eq!(a.class_rows(2), (80..120).collect::<Vec<_>>());
    }
}
