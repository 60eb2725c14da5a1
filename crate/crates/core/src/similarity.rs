//! Dense pairwise distance and similarity matrices over the rows of one class.
//!
//! Every entry is computed independently with a fixed, ascending-coordinate
//! reduction order, and only the upper triangle is evaluated before being
//! mirrored. The matrices are therefore exactly symmetric and bit-identical no
//! matter how many rayon workers participate.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::Kernel;

/// Euclidean distances between rows; zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    values: Array2<f64>,
}

/// Kernel similarities between rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    values: Array2<f64>,
    kernel: Option<Kernel>,
}

impl DistanceMatrix {
    /// Wraps a precomputed matrix. Must be square, symmetric, non-negative
    /// with a zero diagonal.
    pub fn from_array(values: Array2<f64>) -> Result<Self> {
        check_square_symmetric(&values)?;
        for i in 0..values.nrows() {
            if values[[i, i]] != 0.0 {
                return Err(crate::error::invalid("distance diagonal must be zero"));
            }
        }
        if values.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(crate::error::invalid(
                "distances must be finite and non-negative",
            ));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }
}

impl SimilarityMatrix {
    /// Wraps an arbitrary symmetric matrix, e.g. for constructing test
    /// instances directly.
    pub fn from_array(values: Array2<f64>) -> Result<Self> {
        check_square_symmetric(&values)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(crate::error::invalid("similarities must be finite"));
        }
        Ok(Self {
            values,
            kernel: None,
        })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    /// Row `j` as a slice. Because the matrix is exactly symmetric this is also
    /// column `j`.
    #[inline]
    pub fn row_slice(&self, j: usize) -> &[f64] {
        let n = self.len();
        &self.values.as_slice().expect("standard layout")[j * n..(j + 1) * n]
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    /// The kernel that produced the matrix, `None` for hand-built matrices.
    pub fn kernel(&self) -> Option<Kernel> {
        self.kernel
    }

    /// True when every entry lies in `[0, 1]`.
    pub fn is_unit_interval(&self) -> bool {
        self.values.iter().all(|&v| (0.0..=1.0).contains(&v))
    }
}

fn check_square_symmetric(values: &Array2<f64>) -> Result<()> {
    let (n, m) = values.dim();
    if n != m {
        return Err(crate::error::invalid(format!(
            "matrix must be square, got {n}x{m}"
        )));
    }
    if n == 0 {
        return Err(Error::Empty("matrix"));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if values[[i, j]] != values[[j, i]] {
                return Err(crate::error::invalid(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

fn check_finite(rows: ArrayView2<'_, f64>) -> Result<()> {
    if rows.nrows() == 0 {
        return Err(Error::Empty("rows"));
    }
    if rows.ncols() == 0 {
        return Err(crate::error::invalid(
            "rows must have at least one coordinate",
        ));
    }
    for (row, values) in rows.rows().into_iter().enumerate() {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row });
        }
    }
    Ok(())
}

/// Builds an exactly symmetric matrix by evaluating `f(i, j)` for `i < j`
/// in parallel and mirroring.
fn symmetric_from_fn<F>(n: usize, diagonal: f64, f: F) -> Array2<f64>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let mut values = Array2::<f64>::zeros((n, n));
    let buf = values.as_slice_mut().expect("standard layout");
    buf.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        row[i] = diagonal;
        for (j, slot) in row.iter_mut().enumerate().skip(i + 1) {
            *slot = f(i, j);
        }
    });
    for i in 0..n {
        for j in (i + 1)..n {
            values[[j, i]] = values[[i, j]];
        }
    }
    values
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

fn contiguous(rows: ArrayView2<'_, f64>) -> Array2<f64> {
    rows.as_standard_layout().into_owned()
}

/// Euclidean distance matrix of `rows` (`n x d`).
pub fn pairwise_distances(rows: ArrayView2<'_, f64>) -> Result<DistanceMatrix> {
    check_finite(rows)?;
    let rows = contiguous(rows);
    let d = rows.ncols();
    let data = rows.as_slice().expect("standard layout");
    let values = symmetric_from_fn(rows.nrows(), 0.0, |i, j| {
        squared_distance(&data[i * d..(i + 1) * d], &data[j * d..(j + 1) * d]).sqrt()
    });
    Ok(DistanceMatrix { values })
}

/// Kernel similarity matrix of `rows` (`n x d`).
///
/// Cosine kernels reject all-zero rows. Diagonals are set to the kernel's
/// self-similarity of exactly 1.
pub fn pairwise_similarities(
    rows: ArrayView2<'_, f64>,
    kernel: Kernel,
) -> Result<SimilarityMatrix> {
    check_finite(rows)?;
    let rows = contiguous(rows);
    let n = rows.nrows();
    let d = rows.ncols();
    let data = rows.as_slice().expect("standard layout");
    let row = |i: usize| &data[i * d..(i + 1) * d];

    let values = match kernel {
        Kernel::Cosine | Kernel::ShiftedCosine => {
            let norms: Vec<f64> = (0..n).map(|i| dot(row(i), row(i)).sqrt()).collect();
            if let Some(row) = norms.iter().position(|&v| v == 0.0) {
                return Err(Error::ZeroNormRow { row });
            }
            let shifted = matches!(kernel, Kernel::ShiftedCosine);
            symmetric_from_fn(n, 1.0, |i, j| {
                let c = (dot(row(i), row(j)) / (norms[i] * norms[j])).clamp(-1.0, 1.0);
                if shifted {
                    (1.0 + c) / 2.0
                } else {
                    c
                }
            })
        }
        Kernel::Rbf { bandwidth } => {
            if !(bandwidth > 0.0 && bandwidth.is_finite()) {
                return Err(crate::error::invalid("rbf bandwidth must be > 0"));
            }
            let denom = 2.0 * bandwidth * bandwidth;
            symmetric_from_fn(n, 1.0, |i, j| {
                (-squared_distance(row(i), row(j)) / denom).exp()
            })
        }
    };
    Ok(SimilarityMatrix {
        values,
        kernel: Some(kernel),
    })
}
