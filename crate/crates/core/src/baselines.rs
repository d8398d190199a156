//! Reference objectives and solvers: the quadratic matching score in its
//! Frobenius and trace forms, the factored L1 score, an exhaustive search
//! over injective assignments, and a projected-gradient quadratic solver.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::graph::HardAssignment;
use crate::sinkhorn::{sinkhorn_log, SoftAssignment};
use crate::solver::{hungarian, MatchProblem, MatchResult};

/// Largest instance [`brute_force`] will enumerate.
pub const MAX_BRUTE_FORCE_ROWS: usize = 8;
pub const MAX_BRUTE_FORCE_COLS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    /// `⟨U,P⟩ - λ ‖D_A - P D_B Pᵀ‖²_F`
    Frobenius,
    /// `⟨U,P⟩ + λ tr(Pᵀ D_Aᵀ P D_B)`
    Trace,
    /// `⟨U,P⟩ + λ Σ|H_Aᵀ P H_B|`
    LinearL1,
}

/// Structure operand of an objective: dense edge matrices for the quadratic
/// forms, factors for the L1 form.
#[derive(Debug, Clone, Copy)]
pub enum Structure<'a> {
    Dense {
        d_a: &'a DMatrix<f64>,
        d_b: &'a DMatrix<f64>,
    },
    Factored {
        h_a: &'a DMatrix<f64>,
        h_b: &'a DMatrix<f64>,
    },
}

impl Structure<'_> {
    fn sides(&self) -> (usize, usize) {
        match self {
            Structure::Dense { d_a, d_b } => (d_a.nrows(), d_b.nrows()),
            Structure::Factored { h_a, h_b } => (h_a.nrows(), h_b.nrows()),
        }
    }

    fn check(&self, kind: ObjectiveKind, rows: usize, cols: usize) -> Result<()> {
        match (kind, self) {
            (ObjectiveKind::LinearL1, Structure::Factored { .. }) => {}
            (ObjectiveKind::Frobenius | ObjectiveKind::Trace, Structure::Dense { d_a, d_b }) => {
                if !d_a.is_square() || !d_b.is_square() {
                    return Err(invalid("edge matrices must be square"));
                }
            }
            _ => return Err(invalid("objective kind does not match the structure operand")),
        }
        if self.sides() != (rows, cols) {
            return Err(invalid("structure operand does not match the assignment shape"));
        }
        Ok(())
    }
}

/// Objective value of any (hard or relaxed) `n x m` assignment matrix.
pub fn evaluate(
    kind: ObjectiveKind,
    p: &DMatrix<f64>,
    u: &DMatrix<f64>,
    structure: Structure<'_>,
    lambda: f64,
) -> Result<f64> {
    if p.shape() != u.shape() {
        return Err(invalid("assignment and similarity shapes differ"));
    }
    structure.check(kind, p.nrows(), p.ncols())?;
    let unary = p.dot(u);
    let pairwise = match structure {
        Structure::Dense { d_a, d_b } => match kind {
            ObjectiveKind::Frobenius => -(d_a - p * d_b * p.transpose()).norm_squared(),
            _ => (p.transpose() * d_a.transpose() * p * d_b).trace(),
        },
        Structure::Factored { h_a, h_b } => (h_a.transpose() * p * h_b).iter().map(|v| v.abs()).sum(),
    };
    Ok(unary + lambda * pairwise)
}

/// [`evaluate`] for a discrete assignment given as a row-to-column map.
pub fn evaluate_mapping(
    kind: ObjectiveKind,
    mapping: &[usize],
    u: &DMatrix<f64>,
    structure: Structure<'_>,
    lambda: f64,
) -> Result<f64> {
    if mapping.len() != u.nrows() || mapping.iter().any(|&c| c >= u.ncols()) {
        return Err(invalid("mapping does not fit the similarity matrix"));
    }
    structure.check(kind, u.nrows(), u.ncols())?;
    Ok(mapping_value(kind, mapping, u, structure, lambda))
}

fn mapping_value(
    kind: ObjectiveKind,
    mapping: &[usize],
    u: &DMatrix<f64>,
    structure: Structure<'_>,
    lambda: f64,
) -> f64 {
    let unary: f64 = mapping.iter().enumerate().map(|(i, &j)| u[(i, j)]).sum();
    let pairwise = match structure {
        Structure::Dense { d_a, d_b } => {
            let mut acc = 0.0;
            for (i, &pi) in mapping.iter().enumerate() {
                for (j, &pj) in mapping.iter().enumerate() {
                    acc += match kind {
                        ObjectiveKind::Frobenius => {
                            let r = d_a[(i, j)] - d_b[(pi, pj)];
                            -r * r
                        }
                        _ => d_a[(i, j)] * d_b[(pi, pj)],
                    };
                }
            }
            acc
        }
        Structure::Factored { h_a, h_b } => {
            let mut x = DMatrix::<f64>::zeros(h_a.ncols(), h_b.ncols());
            for (i, &pi) in mapping.iter().enumerate() {
                x.ger(1.0, &h_a.row(i).transpose(), &h_b.row(pi).transpose(), 1.0);
            }
            x.iter().map(|v| v.abs()).sum()
        }
    };
    unary + lambda * pairwise
}

/// Exhaustive maximizer over injective assignments.
///
/// Candidates are visited in lexicographic order of their row-to-column maps
/// and only a strictly better value replaces the incumbent, so ties resolve
/// to the lexicographically smallest map.
pub fn brute_force(
    u: &DMatrix<f64>,
    structure: Structure<'_>,
    lambda: f64,
    kind: ObjectiveKind,
) -> Result<(HardAssignment, f64)> {
    let (n, m) = u.shape();
    if n > MAX_BRUTE_FORCE_ROWS || m > MAX_BRUTE_FORCE_COLS {
        return Err(Error::TooLarge {
            rows: n,
            cols: m,
            max_rows: MAX_BRUTE_FORCE_ROWS,
            max_cols: MAX_BRUTE_FORCE_COLS,
        });
    }
    if n > m {
        return Err(invalid("first graph has more nodes than the second"));
    }
    structure.check(kind, n, m)?;

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut current = Vec::with_capacity(n);
    let mut used = vec![false; m];
    enumerate(n, m, &mut current, &mut used, &mut |mapping| {
        let v = mapping_value(kind, mapping, u, structure, lambda);
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((mapping.to_vec(), v));
        }
    });
    let (mapping, value) = best.expect("at least one injective assignment exists");
    Ok((HardAssignment::from_mapping(m, mapping)?, value))
}

fn enumerate(n: usize, m: usize, current: &mut Vec<usize>, used: &mut [bool], visit: &mut impl FnMut(&[usize])) {
    if current.len() == n {
        visit(current);
        return;
    }
    for c in 0..m {
        if used[c] {
            continue;
        }
        used[c] = true;
        current.push(c);
        enumerate(n, m, current, used, visit);
        current.pop();
        used[c] = false;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgdParams {
    pub lambda: f64,
    /// Ascent step; `None` uses `1 / (2 λ d_max² + 1)`.
    pub step: Option<f64>,
    pub iters: usize,
    /// Stop early once `P` moves less than this (L∞); zero disables.
    pub tol: f64,
    pub sinkhorn_max_iters: usize,
    pub sinkhorn_tol: f64,
}

impl Default for PgdParams {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            step: None,
            iters: 100,
            tol: 1e-6,
            sinkhorn_max_iters: 1000,
            sinkhorn_tol: 1e-6,
        }
    }
}

/// Projected gradient ascent on the trace-form quadratic objective.
///
/// Each step moves along `U + λ (D_A P D_Bᵀ + D_Aᵀ P D_B)` in log space and
/// projects back onto the doubly stochastic set by Sinkhorn scaling, i.e.
/// `P ← Sinkhorn(P ∘ exp(η ∇))`. Uses the raw (unshifted) edge matrices.
pub fn pgd_solve(problem: &MatchProblem, params: &PgdParams) -> Result<MatchResult> {
    if !(params.lambda >= 0.0) || params.iters == 0 {
        return Err(invalid("pgd needs lambda >= 0 and at least one iteration"));
    }
    let (n, m) = (problem.rows(), problem.cols());
    if n > m {
        return Err(invalid("first graph must not have more nodes than the second"));
    }
    let step = match params.step {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(_) => return Err(invalid("pgd step must be positive")),
        None => {
            let d = problem.structure.d_max;
            1.0 / (2.0 * params.lambda * d * d + 1.0)
        }
    };
    let u = problem.similarity.values();
    let d_a = problem.d_a.values();
    let d_b = problem.d_b.values();

    // full square iterate; rows past n are padding
    let mut full = DMatrix::from_element(m, m, if m == 0 { 0.0 } else { 1.0 / m as f64 });
    let mut soft: Option<SoftAssignment> = None;
    let mut trace = Vec::with_capacity(params.iters);
    let mut sinkhorn_total = 0;
    let mut iters = 0;
    let mut converged = false;

    for _ in 0..params.iters {
        let real = full.rows(0, n).into_owned();
        let grad = u + (d_a * &real * d_b.transpose() + d_a.transpose() * &real * d_b) * params.lambda;
        let mut scores = full.map(|v| libm::log(v.max(1e-300)));
        scores.rows_mut(0, n).zip_apply(&grad, |s, g| *s += step * g);

        let next = sinkhorn_log(&scores, 1.0, params.sinkhorn_max_iters, params.sinkhorn_tol)?;
        iters += 1;
        sinkhorn_total += next.iterations();
        let change = (next.values() - &full).amax();
        full = next.values().clone();
        let real = full.rows(0, n).into_owned();
        trace.push(evaluate(
            ObjectiveKind::Trace,
            &real,
            u,
            Structure::Dense { d_a, d_b },
            params.lambda,
        )?);
        soft = Some(next.with_real_rows(n));
        if change <= params.tol {
            converged = true;
            break;
        }
    }

    let soft = soft.expect("at least one iteration ran");
    let hard = hungarian(&soft)?;
    Ok(MatchResult {
        hard,
        converged: converged && soft.converged(),
        soft,
        objective_trace: trace,
        outer_iters: iters,
        sinkhorn_iters_total: sinkhorn_total,
        wall_time_ms: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{AttributeKind, EdgeAttributes, NodeSimilarity};

    fn sym(n: usize, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { f(i.min(j), i.max(j)) })
    }

    #[test]
    fn identical_graphs_have_zero_penalty() {
        let d = sym(3, |i, j| (i * 3 + j) as f64);
        let u = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0]);
        let p = DMatrix::identity(3, 3);
        let v = evaluate(
            ObjectiveKind::Frobenius,
            &p,
            &u,
            Structure::Dense { d_a: &d, d_b: &d },
            0.7,
        )
        .unwrap();
        assert_eq!(v, 6.0);
    }

    #[test]
    fn mapping_and_dense_agree() {
        let d_a = sym(3, |i, j| (i + 2 * j) as f64 * 0.3);
        let d_b = sym(4, |i, j| (3 * i + j) as f64 * 0.1);
        let u = DMatrix::from_fn(3, 4, |i, j| ((i * 7 + j * 3) % 5) as f64);
        let map = [2usize, 0, 3];
        let p = HardAssignment::from_mapping(4, map.to_vec()).unwrap().to_matrix();
        for kind in [ObjectiveKind::Frobenius, ObjectiveKind::Trace] {
            let s = Structure::Dense { d_a: &d_a, d_b: &d_b };
            let a = evaluate(kind, &p, &u, s, 0.4).unwrap();
            let b = evaluate_mapping(kind, &map, &u, s, 0.4).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        let h_a = DMatrix::from_fn(3, 2, |i, j| (i as f64) - (j as f64) * 0.5);
        let h_b = DMatrix::from_fn(4, 3, |i, j| (i * j) as f64 * 0.2 - 0.3);
        let s = Structure::Factored { h_a: &h_a, h_b: &h_b };
        let a = evaluate(ObjectiveKind::LinearL1, &p, &u, s, 0.4).unwrap();
        let b = evaluate_mapping(ObjectiveKind::LinearL1, &map, &u, s, 0.4).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn kind_structure_mismatch() {
        let d = DMatrix::zeros(2, 2);
        let p = DMatrix::identity(2, 2);
        assert!(evaluate(
            ObjectiveKind::LinearL1,
            &p,
            &d,
            Structure::Dense { d_a: &d, d_b: &d },
            1.0
        )
        .is_err());
        assert!(evaluate(
            ObjectiveKind::Trace,
            &p,
            &d,
            Structure::Factored { h_a: &d, h_b: &d },
            1.0
        )
        .is_err());
    }

    #[test]
    fn brute_force_small_cases() {
        let one = DMatrix::from_element(1, 1, 0.5);
        let z = DMatrix::zeros(1, 1);
        let (p, v) = brute_force(&one, Structure::Dense { d_a: &z, d_b: &z }, 0.1, ObjectiveKind::Trace).unwrap();
        assert_eq!(p, HardAssignment::identity(1));
        assert_eq!(v, 0.5);

        let perm = [1usize, 3, 0, 2];
        let mut u = DMatrix::zeros(4, 4);
        for (i, &j) in perm.iter().enumerate() {
            u[(i, j)] = 10.0;
        }
        let z = DMatrix::zeros(4, 4);
        let (p, v) = brute_force(&u, Structure::Dense { d_a: &z, d_b: &z }, 0.0, ObjectiveKind::Trace).unwrap();
        assert_eq!(p.mapping(), &perm);
        assert_eq!(v, 40.0);

        // all-zero instance: every map ties, lexicographically first wins
        let (p, _) = brute_force(&z, Structure::Dense { d_a: &z, d_b: &z }, 1.0, ObjectiveKind::Trace).unwrap();
        assert_eq!(p, HardAssignment::identity(4));
    }

    #[test]
    fn brute_force_size_limit() {
        let u = DMatrix::zeros(9, 9);
        let r = brute_force(&u, Structure::Dense { d_a: &u, d_b: &u }, 0.1, ObjectiveKind::Trace);
        assert!(matches!(r, Err(Error::TooLarge { .. })));
    }

    #[test]
    fn pgd_unary_dominant() {
        let u = DMatrix::from_fn(4, 4, |i, j| if i == j { 5.0 } else { 0.0 });
        let d = EdgeAttributes::from_matrix(sym(4, |i, j| (i + j) as f64), AttributeKind::Length).unwrap();
        let problem = MatchProblem::new(NodeSimilarity::from_matrix(u).unwrap(), d.clone(), d).unwrap();
        let r = pgd_solve(
            &problem,
            &PgdParams {
                lambda: 0.0,
                ..PgdParams::default()
            },
        )
        .unwrap();
        assert_eq!(r.hard, HardAssignment::identity(4));
    }
}
