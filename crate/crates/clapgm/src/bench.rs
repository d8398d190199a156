//! Benchmark runner over synthetic pairs.
//!
//! Wall time covers building the matching problem (PSD shift and
//! factorization) plus the solver call. Attribute and similarity
//! construction happen outside the timed region.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use clapgm_core::{
    accuracy, edge_attributes, node_similarity, pgd_solve, solve, AttributeKind, EdgeAttributes, GraphSide,
    MatchProblem, MatchResult, PgdParams, SolverParams,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::{gen_pair, SynthConfig};

pub const TIMING_SCOPE: &str = "solver only: PSD shift, factorization and solve; attribute construction excluded";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Clap,
    Pgd,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Clap => "clap",
            SolverKind::Pgd => "pgd",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clap" => Ok(SolverKind::Clap),
            "pgd" => Ok(SolverKind::Pgd),
            other => Err(Error::Usage(format!("unknown solver `{other}` (expected clap or pgd)"))),
        }
    }
}

/// Solver knobs shared by every pair of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchSettings {
    pub solver: SolverParams,
    pub pgd: PgdParams,
    pub normalize_lengths: bool,
    pub similarity_scale: f64,
    /// Worker threads; 1 runs inline.
    pub jobs: usize,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            solver: SolverParams::default(),
            pgd: PgdParams::default(),
            normalize_lengths: true,
            similarity_scale: 1.0,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub pair_index: usize,
    pub solver: SolverKind,
    pub attribute: String,
    /// `None` when the pair failed.
    pub acc: Option<f64>,
    pub time_ms: f64,
    pub outer_iters: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub solver: SolverKind,
    pub attribute: String,
    pub pairs: usize,
    pub failed: usize,
    pub mean_acc_pct: f64,
    pub mean_time_ms: f64,
    pub fps: f64,
    pub converged_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub descriptor_model: String,
    pub timing_scope: String,
    pub records: Vec<BenchRecord>,
    /// Keyed by `solver/attribute`.
    pub aggregates: BTreeMap<String, Aggregate>,
}

impl BenchReport {
    pub fn from_records(descriptor_model: String, records: Vec<BenchRecord>) -> Self {
        let aggregates = aggregate(&records);
        Self {
            descriptor_model,
            timing_scope: TIMING_SCOPE.to_string(),
            records,
            aggregates,
        }
    }

    pub fn aggregate_for(&self, solver: SolverKind, attribute: AttributeKind) -> Option<&Aggregate> {
        self.aggregates.get(&combo_key(solver, attribute.name()))
    }
}

pub fn combo_key(solver: SolverKind, attribute: &str) -> String {
    format!("{solver}/{attribute}")
}

fn aggregate(records: &[BenchRecord]) -> BTreeMap<String, Aggregate> {
    let mut groups: BTreeMap<String, Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(combo_key(r.solver, &r.attribute)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(key, rs)| {
            let ok: Vec<&&BenchRecord> = rs.iter().filter(|r| r.acc.is_some()).collect();
            let count = ok.len().max(1) as f64;
            let mean_acc = ok.iter().filter_map(|r| r.acc).sum::<f64>() / count;
            let mean_time = ok.iter().map(|r| r.time_ms).sum::<f64>() / count;
            let agg = Aggregate {
                solver: rs[0].solver,
                attribute: rs[0].attribute.clone(),
                pairs: rs.len(),
                failed: rs.len() - ok.len(),
                mean_acc_pct: 100.0 * mean_acc,
                mean_time_ms: mean_time,
                fps: if mean_time > 0.0 {
                    1000.0 / mean_time
                } else {
                    f64::INFINITY
                },
                converged_fraction: ok.iter().filter(|r| r.converged).count() as f64 / count,
            };
            (key, agg)
        })
        .collect()
}

fn side_attributes(side: &GraphSide, kind: AttributeKind, normalize: bool) -> clapgm_core::Result<EdgeAttributes> {
    if side.len() < 2 {
        EdgeAttributes::from_matrix(clapgm_core::DMatrix::zeros(side.len(), side.len()), kind)
    } else {
        edge_attributes(side, kind, normalize)
    }
}

/// Runs one solver on one pair, timing problem preparation plus the solve.
pub fn run_solver(
    solver: SolverKind,
    a: &GraphSide,
    b: &GraphSide,
    kind: AttributeKind,
    settings: &BenchSettings,
) -> clapgm_core::Result<MatchResult> {
    let u = node_similarity(a, b, settings.similarity_scale)?;
    let d_a = side_attributes(a, kind, settings.normalize_lengths)?;
    let d_b = side_attributes(b, kind, settings.normalize_lengths)?;

    let start = Instant::now();
    let problem = MatchProblem::new(u, d_a, d_b)?;
    let mut result = match solver {
        SolverKind::Clap => solve(&problem, &settings.solver)?,
        SolverKind::Pgd => pgd_solve(&problem, &settings.pgd)?,
    };
    result.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(result)
}

fn run_pair(
    config: &SynthConfig,
    index: usize,
    solvers: &[SolverKind],
    attrs: &[AttributeKind],
    settings: &BenchSettings,
) -> Vec<BenchRecord> {
    let pair = gen_pair(config, index);
    let mut out = Vec::with_capacity(solvers.len() * attrs.len());
    for &solver in solvers {
        for &kind in attrs {
            let outcome = pair.as_ref().map_err(|e| e.to_string()).and_then(|p| {
                let r = run_solver(solver, &p.a, &p.b, kind, settings).map_err(|e| e.to_string())?;
                let acc = accuracy(&r.hard, &p.truth).map_err(|e| e.to_string())?;
                Ok((r, acc))
            });
            out.push(match outcome {
                Ok((r, acc)) => BenchRecord {
                    pair_index: index,
                    solver,
                    attribute: kind.name().to_string(),
                    acc: Some(acc),
                    time_ms: r.wall_time_ms,
                    outer_iters: r.outer_iters,
                    converged: r.converged,
                    error: None,
                },
                Err(e) => BenchRecord {
                    pair_index: index,
                    solver,
                    attribute: kind.name().to_string(),
                    acc: None,
                    time_ms: 0.0,
                    outer_iters: 0,
                    converged: false,
                    error: Some(e),
                },
            });
        }
    }
    out
}

/// Solves every generated pair with every `(solver, attribute)` combination.
///
/// Failed pairs become records with `acc = None`; the run itself only fails
/// on invalid configuration.
pub fn run_benchmark(
    config: &SynthConfig,
    solvers: &[SolverKind],
    attrs: &[AttributeKind],
    settings: &BenchSettings,
) -> Result<BenchReport> {
    config.validate()?;
    settings.solver.validate()?;
    if solvers.is_empty() || attrs.is_empty() {
        return Err(Error::Usage("need at least one solver and one attribute kind".into()));
    }

    let mut records: Vec<BenchRecord> = if settings.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.jobs)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {} workers: {e}", settings.jobs)))?;
        pool.install(|| {
            (0..config.pairs)
                .into_par_iter()
                .flat_map_iter(|i| run_pair(config, i, solvers, attrs, settings))
                .collect()
        })
    } else {
        (0..config.pairs)
            .flat_map(|i| run_pair(config, i, solvers, attrs, settings))
            .collect()
    };
    records.sort_by(|x, y| (x.pair_index, x.solver, &x.attribute).cmp(&(y.pair_index, y.solver, &y.attribute)));
    Ok(BenchReport::from_records(config.descriptor_model(), records))
}
