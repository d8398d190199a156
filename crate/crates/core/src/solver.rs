//! Concave linear approximation solver.
//!
//! The quadratic structure score `tr(Pᵀ D̂_A P D̂_B) = ‖H_Aᵀ P H_B‖²_F` is
//! replaced by the L1 norm `Σ|H_Aᵀ P H_B|` and an entropy term is added:
//!
//! ```text
//! F(P) = ⟨U, P⟩ + λ Σ_kl |(H_Aᵀ P H_B)_kl| + ε h(P),   h(P) = -Σ P_ij log P_ij
//! ```
//!
//! With the sign pattern `S = sign(H_Aᵀ P H_B)` held fixed the L1 term is
//! linear, `⟨H_A S H_Bᵀ, P⟩`, and the subproblem is an entropic transport
//! problem solved by [`sinkhorn_log`]. Since `Σ|X| >= ⟨S, X⟩` with equality at
//! the current iterate, alternating sign updates and Sinkhorn solves never
//! decreases `F`.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::assignment::max_weight_assignment;
use crate::error::{invalid, Result};
use crate::graph::{
    edge_attributes, node_similarity, AttributeKind, EdgeAttributes, GraphSide, HardAssignment, NodeSimilarity,
};
use crate::psd::{prepare_structure, FactoredStructure, DEFAULT_EIGEN_TOL};
use crate::sinkhorn::{sinkhorn_log, SoftAssignment};

/// Relative dead-zone below which a structure entry counts as zero.
const SIGN_DEAD_ZONE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    /// Weight of the structure term.
    pub lambda: f64,
    /// Weight of the entropy term.
    pub epsilon: f64,
    pub sinkhorn_max_iters: usize,
    /// L∞ tolerance on row and column sums.
    pub sinkhorn_tol: f64,
    /// Sign-update rounds. 1 is a single Sinkhorn solve with the signs taken
    /// at the uniform start.
    pub outer_max_iters: usize,
    /// L∞ change in `P` between outer iterations.
    pub outer_tol: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            epsilon: 1.0,
            sinkhorn_max_iters: 1000,
            sinkhorn_tol: 1e-6,
            outer_max_iters: 1,
            outer_tol: 1e-5,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(invalid("lambda must be nonnegative and finite"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(invalid("epsilon must be positive and finite"));
        }
        if !(self.sinkhorn_tol > 0.0) || !(self.outer_tol > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if self.sinkhorn_max_iters == 0 || self.outer_max_iters == 0 {
            return Err(invalid("iteration caps must be positive"));
        }
        Ok(())
    }
}

/// Everything a solver needs for one graph pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchProblem {
    pub similarity: NodeSimilarity,
    pub d_a: EdgeAttributes,
    pub d_b: EdgeAttributes,
    pub structure: FactoredStructure,
}

impl MatchProblem {
    pub fn new(similarity: NodeSimilarity, d_a: EdgeAttributes, d_b: EdgeAttributes) -> Result<Self> {
        Self::with_eigen_tol(similarity, d_a, d_b, DEFAULT_EIGEN_TOL)
    }

    pub fn with_eigen_tol(
        similarity: NodeSimilarity,
        d_a: EdgeAttributes,
        d_b: EdgeAttributes,
        tol: f64,
    ) -> Result<Self> {
        let (n, m) = (similarity.nrows(), similarity.ncols());
        if d_a.size() != n || d_b.size() != m {
            return Err(invalid(alloc::format!(
                "similarity is {n}x{m} but edge matrices are {0}x{0} and {1}x{1}",
                d_a.size(),
                d_b.size()
            )));
        }
        if n > m {
            return Err(invalid(alloc::format!(
                "first graph has more nodes ({n}) than the second ({m})"
            )));
        }
        let structure = prepare_structure(&d_a, &d_b, tol)?;
        Ok(Self {
            similarity,
            d_a,
            d_b,
            structure,
        })
    }

    /// Builds similarity and edge attributes straight from two graph sides.
    ///
    /// Single-node graphs get a zero `1 x 1` edge matrix.
    pub fn from_sides(
        a: &GraphSide,
        b: &GraphSide,
        kind: AttributeKind,
        normalize: bool,
        similarity_scale: f64,
    ) -> Result<Self> {
        let attrs = |side: &GraphSide| -> Result<EdgeAttributes> {
            if side.len() < 2 {
                EdgeAttributes::from_matrix(DMatrix::zeros(side.len(), side.len()), kind)
            } else {
                edge_attributes(side, kind, normalize)
            }
        };
        Self::new(node_similarity(a, b, similarity_scale)?, attrs(a)?, attrs(b)?)
    }

    pub fn rows(&self) -> usize {
        self.similarity.nrows()
    }

    pub fn cols(&self) -> usize {
        self.similarity.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub hard: HardAssignment,
    pub soft: SoftAssignment,
    /// Regularized objective after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub outer_iters: usize,
    pub sinkhorn_iters_total: usize,
    /// The kept Sinkhorn solve met its tolerance and the outer loop stopped on
    /// its own (always true of the loop when only one round is allowed).
    pub converged: bool,
    /// Filled in by callers that time the solve; the core has no clock.
    pub wall_time_ms: f64,
}

/// Entrywise sign of `H_Aᵀ P H_B`, zero inside a small relative dead-zone.
pub fn sign_matrix(h_a: &DMatrix<f64>, p: &DMatrix<f64>, h_b: &DMatrix<f64>) -> DMatrix<f64> {
    let x = h_a.transpose() * p * h_b;
    let scale = h_a.norm() * p.norm() * h_b.norm();
    let cut = SIGN_DEAD_ZONE * scale;
    x.map(|v| if v.abs() <= cut { 0.0 } else { v.signum() })
}

/// `M = U + λ H_A S H_Bᵀ`.
pub fn score_matrix(
    u: &DMatrix<f64>,
    h_a: &DMatrix<f64>,
    s: &DMatrix<f64>,
    h_b: &DMatrix<f64>,
    lambda: f64,
) -> DMatrix<f64> {
    if lambda == 0.0 {
        return u.clone();
    }
    u + (h_a * s * h_b.transpose()) * lambda
}

/// `Σ_kl |(H_Aᵀ P H_B)_kl|`.
pub fn l1_structure(h_a: &DMatrix<f64>, p: &DMatrix<f64>, h_b: &DMatrix<f64>) -> f64 {
    (h_a.transpose() * p * h_b).iter().map(|v| v.abs()).sum()
}

fn entropy(p: &DMatrix<f64>) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * libm::log(v)).sum::<f64>()
}

/// Regularized objective `⟨U,P⟩ + λ Σ|H_Aᵀ P H_B| + ε h(P)` for a strictly positive `P`.
pub fn objective_value(
    p: &DMatrix<f64>,
    u: &DMatrix<f64>,
    h_a: &DMatrix<f64>,
    h_b: &DMatrix<f64>,
    lambda: f64,
    epsilon: f64,
) -> Result<f64> {
    check_shapes(p, u, h_a, h_b)?;
    if p.iter().any(|&v| !(v > 0.0)) {
        return Err(invalid(
            "entropy needs strictly positive entries; use hard_objective_value",
        ));
    }
    Ok(objective_unchecked(p, u, h_a, h_b, lambda, epsilon))
}

/// The linear L1 objective of a discrete assignment (its entropy is zero).
pub fn hard_objective_value(
    p: &HardAssignment,
    u: &DMatrix<f64>,
    h_a: &DMatrix<f64>,
    h_b: &DMatrix<f64>,
    lambda: f64,
) -> Result<f64> {
    let dense = p.to_matrix();
    check_shapes(&dense, u, h_a, h_b)?;
    Ok(objective_unchecked(&dense, u, h_a, h_b, lambda, 0.0))
}

fn check_shapes(p: &DMatrix<f64>, u: &DMatrix<f64>, h_a: &DMatrix<f64>, h_b: &DMatrix<f64>) -> Result<()> {
    if p.shape() != u.shape() || h_a.nrows() != p.nrows() || h_b.nrows() != p.ncols() {
        return Err(invalid("assignment, similarity and factor shapes disagree"));
    }
    Ok(())
}

fn objective_unchecked(
    p: &DMatrix<f64>,
    u: &DMatrix<f64>,
    h_a: &DMatrix<f64>,
    h_b: &DMatrix<f64>,
    lambda: f64,
    epsilon: f64,
) -> f64 {
    let unary = p.dot(u);
    let structure = if lambda == 0.0 {
        0.0
    } else {
        lambda * l1_structure(h_a, p, h_b)
    };
    let ent = if epsilon == 0.0 { 0.0 } else { epsilon * entropy(p) };
    unary + structure + ent
}

/// Discretizes the real rows of a soft assignment by maximizing `Σ P_soft ∘ P_hard`.
pub fn hungarian(p: &SoftAssignment) -> Result<HardAssignment> {
    max_weight_assignment(&p.real())
}

/// Appends zero rows so an `n x m` score matrix becomes `m x m`.
pub(crate) fn pad_rows(scores: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = scores.shape();
    if n >= m {
        return scores.clone();
    }
    let mut padded = DMatrix::zeros(m, m);
    padded.rows_mut(0, n).copy_from(scores);
    padded
}

/// Square (padded) Sinkhorn on an `n x m` score matrix, real rows marked.
pub(crate) fn sinkhorn_padded(
    scores: &DMatrix<f64>,
    epsilon: f64,
    max_iters: usize,
    tol: f64,
) -> Result<SoftAssignment> {
    let n = scores.nrows();
    Ok(sinkhorn_log(&pad_rows(scores), epsilon, max_iters, tol)?.with_real_rows(n))
}

pub fn solve(problem: &MatchProblem, params: &SolverParams) -> Result<MatchResult> {
    params.validate()?;
    let (n, m) = (problem.rows(), problem.cols());
    if n > m {
        return Err(invalid("first graph must not have more nodes than the second"));
    }
    let u = problem.similarity.values();
    let h_a = &problem.structure.h_a;
    let h_b = &problem.structure.h_b;

    let mut p = DMatrix::from_element(n, m, if m == 0 { 0.0 } else { 1.0 / m as f64 });
    let mut seen_signs: Vec<DMatrix<f64>> = Vec::new();
    let mut trace = Vec::new();
    let mut best: Option<(f64, SoftAssignment)> = None;
    let mut sinkhorn_total = 0;
    // a single-round solve has no outer fixed point to miss
    let mut outer_converged = params.outer_max_iters == 1;
    let mut outer_iters = 0;

    for _ in 0..params.outer_max_iters {
        let s = sign_matrix(h_a, &p, h_b);
        if seen_signs.contains(&s) {
            // same pattern gives the same subproblem: fixed point or cycle
            outer_converged = true;
            break;
        }
        let scores = score_matrix(u, h_a, &s, h_b, params.lambda);
        seen_signs.push(s);

        let soft = sinkhorn_padded(&scores, params.epsilon, params.sinkhorn_max_iters, params.sinkhorn_tol)?;
        outer_iters += 1;
        sinkhorn_total += soft.iterations();
        let next = soft.real();
        let value = objective_unchecked(&next, u, h_a, h_b, params.lambda, params.epsilon);
        trace.push(value);
        let change = (&next - &p).amax();
        p = next;
        if best.as_ref().is_none_or(|(v, _)| value >= *v) {
            best = Some((value, soft));
        }
        if change <= params.outer_tol {
            outer_converged = true;
            break;
        }
    }

    let (_, soft) = best.expect("outer loop runs at least once");
    let hard = hungarian(&soft)?;
    Ok(MatchResult {
        hard,
        converged: outer_converged && soft.converged(),
        soft,
        objective_trace: trace,
        outer_iters,
        sinkhorn_iters_total: sinkhorn_total,
        wall_time_ms: 0.0,
    })
}
