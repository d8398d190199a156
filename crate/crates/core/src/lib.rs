//! Graph matching by concave linear approximation of the Koopmans-Beckmann
//! quadratic assignment problem.
//!
//! Pipeline: build node similarities and symmetric edge attributes
//! ([`graph`]), shift both edge matrices to be positive semi-definite and
//! factor them ([`psd`]), then maximize the entropy-regularized L1 objective
//! with sign updates (one round by default) and log-domain Sinkhorn scaling before
//! rounding with the Hungarian method ([`solver`]). [`baselines`] carries the
//! quadratic objectives, an exhaustive oracle and a projected-gradient solver
//! for comparison.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod assignment;
pub mod baselines;
pub mod delaunay;
pub mod error;
pub mod graph;
pub mod psd;
pub mod sinkhorn;
pub mod solver;

pub use assignment::max_weight_assignment;
pub use baselines::{brute_force, evaluate, pgd_solve, ObjectiveKind, PgdParams, Structure};
pub use error::{Error, Result};
pub use graph::{
    accuracy, adjacency_attributes, edge_attributes, inner_product_attributes, length_attributes, node_similarity,
    AttributeKind, EdgeAttributes, GraphSide, HardAssignment, NodeSimilarity, Point,
};
pub use nalgebra::DMatrix;
pub use psd::{factorize, prepare_structure, psd_shift, row_absolute_radius, FactoredStructure, ShiftedPair};
pub use sinkhorn::{sinkhorn_log, SoftAssignment};
pub use solver::{
    hard_objective_value, hungarian, l1_structure, objective_value, score_matrix, sign_matrix, solve, MatchProblem,
    MatchResult, SolverParams,
};
