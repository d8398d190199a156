//! Diagonal shift that makes a pair of edge-attribute matrices positive
//! semi-definite, and the `D = H Hᵀ` factorization used by the solver.
//!
//! Both matrices receive the same diagonal value `d_max`, the largest
//! absolute off-diagonal row sum over either matrix. By Gershgorin every
//! eigenvalue of the shifted matrix is at least `d_max - R_i >= 0`, and since
//! a permutation leaves a constant diagonal in place, the shift only adds a
//! constant to the quadratic matching score.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::graph::EdgeAttributes;

/// Relative eigenvalue cutoff used when factorizing shifted matrices.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;

/// Sum of absolute off-diagonal entries of each row.
pub fn row_absolute_radius(d: &DMatrix<f64>) -> alloc::vec::Vec<f64> {
    d.row_iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, v)| v.abs())
                .sum()
        })
        .collect()
}

/// Output of [`psd_shift`].
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedPair {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub d_max: f64,
}

pub fn psd_shift(d_a: &EdgeAttributes, d_b: &EdgeAttributes) -> ShiftedPair {
    shift_matrices(d_a.values(), d_b.values())
}

/// [`psd_shift`] on raw square matrices; off-diagonals are copied verbatim.
pub fn shift_matrices(d_a: &DMatrix<f64>, d_b: &DMatrix<f64>) -> ShiftedPair {
    let d_max = row_absolute_radius(d_a)
        .into_iter()
        .chain(row_absolute_radius(d_b))
        .fold(0.0, f64::max);
    let mut a = d_a.clone();
    let mut b = d_b.clone();
    a.fill_diagonal(d_max);
    b.fill_diagonal(d_max);
    ShiftedPair { a, b, d_max }
}

/// Rank-revealing factor `H` with `H Hᵀ ≈ d_hat`.
///
/// Eigenpairs with `λ <= tol · max|λ|` are dropped; slightly negative ones
/// inside that band are clamped. Anything more negative is an error.
pub fn factorize(d_hat: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    if !d_hat.is_square() {
        return Err(invalid("factorize needs a square matrix"));
    }
    if !(tol >= 0.0) {
        return Err(invalid("eigenvalue tolerance must be nonnegative"));
    }
    let n = d_hat.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if d_hat.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let eig = SymmetricEigen::new(d_hat.clone());
    let scale = eig.eigenvalues.amax();
    let cutoff = tol * scale;
    let min = eig.eigenvalues.min();
    if min < -cutoff {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            threshold: -cutoff,
        });
    }

    let mut order: alloc::vec::Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > cutoff).collect();
    // descending eigenvalue order keeps the factor layout stable
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut h = DMatrix::zeros(n, order.len());
    for (col, &k) in order.iter().enumerate() {
        let root = libm::sqrt(eig.eigenvalues[k]);
        h.set_column(col, &(eig.eigenvectors.column(k) * root));
    }
    Ok(h)
}

/// Shifted edge matrices of both graphs together with their factors.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredStructure {
    pub d_hat_a: DMatrix<f64>,
    pub d_hat_b: DMatrix<f64>,
    pub h_a: DMatrix<f64>,
    pub h_b: DMatrix<f64>,
    pub d_max: f64,
}

impl FactoredStructure {
    pub fn rank_a(&self) -> usize {
        self.h_a.ncols()
    }

    pub fn rank_b(&self) -> usize {
        self.h_b.ncols()
    }
}

pub fn prepare_structure(d_a: &EdgeAttributes, d_b: &EdgeAttributes, tol: f64) -> Result<FactoredStructure> {
    let ShiftedPair { a, b, d_max } = psd_shift(d_a, d_b);
    let h_a = factorize(&a, tol)?;
    let h_b = factorize(&b, tol)?;
    Ok(FactoredStructure {
        d_hat_a: a,
        d_hat_b: b,
        h_a,
        h_b,
        d_max,
    })
}
