//! Log-domain Sinkhorn scaling for entropy-regularized assignment.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Relaxed assignment produced by Sinkhorn scaling.
///
/// `values` is the square coupling the scaling ran on. When the problem had
/// fewer rows than columns, the trailing rows are zero-score dummies and only
/// the first `real_rows` rows belong to the caller's problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftAssignment {
    values: DMatrix<f64>,
    real_rows: usize,
    converged: bool,
    iterations: usize,
    marginal_error: f64,
}

impl SoftAssignment {
    /// The full (possibly padded) square coupling.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// The rows that belong to the original `n x m` problem.
    pub fn real(&self) -> DMatrix<f64> {
        self.values.rows(0, self.real_rows).into_owned()
    }

    pub fn real_rows(&self) -> usize {
        self.real_rows
    }

    pub fn is_padded(&self) -> bool {
        self.real_rows < self.values.nrows()
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Largest row or column sum deviation from 1 of the returned coupling.
    pub fn marginal_error(&self) -> f64 {
        self.marginal_error
    }

    pub(crate) fn with_real_rows(mut self, real_rows: usize) -> Self {
        self.real_rows = real_rows.min(self.values.nrows());
        self
    }
}

/// Stable `log Σ exp(x)`.
fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = xs.map(|x| libm::exp(x - max)).sum();
    max + libm::log(sum)
}

fn coupling(scores: &DMatrix<f64>, f: &[f64], g: &[f64], epsilon: f64) -> DMatrix<f64> {
    DMatrix::from_fn(scores.nrows(), scores.ncols(), |i, j| {
        libm::exp((scores[(i, j)] + f[i] + g[j]) / epsilon)
    })
}

fn marginal_error(p: &DMatrix<f64>) -> f64 {
    let rows = p.row_iter().map(|r| (r.sum() - 1.0).abs());
    let cols = p.column_iter().map(|c| (c.sum() - 1.0).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

/// Maximizes `⟨M, P⟩ + ε h(P)` over doubly stochastic `P`.
///
/// Returns `P_ij = exp((M_ij + f_i + g_j) / ε)` where the potentials `f`, `g`
/// are alternately refit so rows, then columns, sum to one. Stops once both
/// marginals are within `tol` (L∞) or after `max_iters` sweeps; in the latter
/// case the sweep with the smallest marginal error is returned, flagged as
/// not converged.
pub fn sinkhorn_log(scores: &DMatrix<f64>, epsilon: f64, max_iters: usize, tol: f64) -> Result<SoftAssignment> {
    if !scores.is_square() {
        return Err(invalid("sinkhorn needs a square score matrix; pad rows first"));
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(invalid("epsilon must be positive and finite"));
    }
    if !(tol > 0.0) {
        return Err(invalid("sinkhorn tolerance must be positive"));
    }
    if max_iters == 0 {
        return Err(invalid("sinkhorn needs at least one iteration"));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(invalid("score matrix has non-finite entries"));
    }
    let n = scores.nrows();
    if n == 0 {
        return Ok(SoftAssignment {
            values: DMatrix::zeros(0, 0),
            real_rows: 0,
            converged: true,
            iterations: 0,
            marginal_error: 0.0,
        });
    }

    let mut f = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;

    for it in 1..=max_iters {
        for (i, fi) in f.iter_mut().enumerate() {
            let row = (0..n).map(|j| (scores[(i, j)] + g[j]) / epsilon);
            *fi = -epsilon * log_sum_exp(row);
        }
        for (j, gj) in g.iter_mut().enumerate() {
            let col = (0..n).map(|i| (scores[(i, j)] + f[i]) / epsilon);
            *gj = -epsilon * log_sum_exp(col);
        }
        let p = coupling(scores, &f, &g, epsilon);
        let err = marginal_error(&p);
        if err <= tol {
            return Ok(SoftAssignment {
                values: p,
                real_rows: n,
                converged: true,
                iterations: it,
                marginal_error: err,
            });
        }
        if best.as_ref().is_none_or(|(e, _, _)| err < *e) {
            best = Some((err, f.clone(), g.clone()));
        }
    }

    let (err, f, g) = best.expect("at least one sweep ran");
    Ok(SoftAssignment {
        values: coupling(scores, &f, &g, epsilon),
        real_rows: n,
        converged: false,
        iterations: max_iters,
        marginal_error: err,
    })
}
