//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage or parse error,
//! 3 oracle gap above threshold.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use clapgm_core::{
    accuracy, brute_force, edge_attributes, hard_objective_value, node_similarity, AttributeKind, EdgeAttributes,
    GraphSide, HardAssignment, MatchProblem, ObjectiveKind, Structure,
};
use serde::Serialize;

use crate::bench::{run_benchmark, run_solver, SolverKind};
use crate::config::CliConfig;
use crate::error::{Error, Result};
use crate::pair::GraphPair;
use crate::report::{emit_csv_dir, emit_report, summary_line, ReportFormat};
use crate::synth::gen_pair;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GAP: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "clapgm",
    version,
    about = "Graph matching with a concave linear QAP approximation"
)]
pub struct Cli {
    /// Key-value config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write synthetic graph-pair JSON files.
    Gen(GenArgs),
    /// Match one graph-pair file and print the result as JSON.
    Match(MatchArgs),
    /// Run solvers over a synthetic suite and write CSV or JSON reports.
    Bench(BenchArgs),
    /// Compare the solver against exhaustive search on small instances.
    Oracle(OracleArgs),
}

#[derive(Debug, Default, Args)]
pub struct SolverFlags {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub sinkhorn_max_iters: Option<usize>,
    #[arg(long)]
    pub sinkhorn_tol: Option<f64>,
    #[arg(long)]
    pub outer_max_iters: Option<usize>,
    #[arg(long)]
    pub outer_tol: Option<f64>,
    #[arg(long)]
    pub similarity_scale: Option<f64>,
    /// Divide edge lengths by the longest edge of each graph.
    #[arg(long)]
    pub normalize: Option<bool>,
}

#[derive(Debug, Default, Args)]
pub struct SynthFlags {
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub height: Option<f64>,
    #[arg(long)]
    pub descriptor_dim: Option<usize>,
    #[arg(long)]
    pub descriptor_noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub synth: SynthFlags,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub attr: Option<String>,
    #[arg(long, default_value = "clap")]
    pub solver: String,
    #[command(flatten)]
    pub solver_flags: SolverFlags,
    /// Write the result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub synth: SynthFlags,
    #[command(flatten)]
    pub solver_flags: SolverFlags,
    /// Comma separated: clap, pgd.
    #[arg(long)]
    pub solvers: Option<String>,
    /// Comma separated: length, adjacency, inner_product.
    #[arg(long)]
    pub attrs: Option<String>,
    #[arg(long)]
    pub format: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub pgd_iters: Option<usize>,
    #[arg(long)]
    pub pgd_step: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Graph-pair file; random instances are generated when omitted.
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[command(flatten)]
    pub synth: SynthFlags,
    #[command(flatten)]
    pub solver_flags: SolverFlags,
    #[arg(long)]
    pub attr: Option<String>,
    /// Largest acceptable mean relative objective gap.
    #[arg(long)]
    pub gap: Option<f64>,
}

impl SolverFlags {
    fn apply(&self, cfg: &mut CliConfig) {
        let s = &mut cfg.solver;
        if let Some(v) = self.lambda {
            s.lambda = v;
        }
        if let Some(v) = self.epsilon {
            s.epsilon = v;
        }
        if let Some(v) = self.sinkhorn_max_iters {
            s.sinkhorn_max_iters = v;
        }
        if let Some(v) = self.sinkhorn_tol {
            s.sinkhorn_tol = v;
        }
        if let Some(v) = self.outer_max_iters {
            s.outer_max_iters = v;
        }
        if let Some(v) = self.outer_tol {
            s.outer_tol = v;
        }
        if let Some(v) = self.similarity_scale {
            cfg.similarity_scale = v;
        }
        if let Some(v) = self.normalize {
            cfg.normalize = v;
        }
    }
}

impl SynthFlags {
    fn apply(&self, cfg: &mut CliConfig) {
        let s = &mut cfg.synth;
        if let Some(v) = self.pairs {
            s.pairs = v;
        }
        if let Some(v) = self.nodes {
            s.nodes = v;
        }
        if let Some(v) = self.width {
            s.width = v;
        }
        if let Some(v) = self.height {
            s.height = v;
        }
        if let Some(v) = self.descriptor_dim {
            s.descriptor_dim = v;
        }
        if let Some(v) = self.descriptor_noise {
            s.descriptor_noise = v;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
    }
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| Error::Usage(e.to_string())))
        .collect()
}

fn parse_attr(text: &str) -> Result<AttributeKind> {
    text.parse()
        .map_err(|e: clapgm_core::Error| Error::Usage(e.to_string()))
}

fn load_config(path: Option<&Path>, cfg: &mut CliConfig) -> Result<()> {
    if let Some(path) = path {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.apply_text(&text)?;
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let mut cfg = CliConfig::default();
    if matches!(cli.command, Command::Oracle(_)) {
        cfg.synth.nodes = 6;
    }
    load_config(cli.config.as_deref(), &mut cfg)?;
    match &cli.command {
        Command::Gen(args) => cmd_gen(args, cfg, stdout),
        Command::Match(args) => cmd_match(args, cfg, stdout),
        Command::Bench(args) => cmd_bench(args, cfg, stdout),
        Command::Oracle(args) => cmd_oracle(args, cfg, stdout, stderr),
    }
}

fn write_out(stdout: &mut dyn Write, text: &str) -> Result<i32> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))?;
    Ok(EXIT_OK)
}

pub fn cmd_gen(args: &GenArgs, mut cfg: CliConfig, stdout: &mut dyn Write) -> Result<i32> {
    args.synth.apply(&mut cfg);
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    cfg.synth.validate()?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("pairs"));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for index in 0..cfg.synth.pairs {
        let pair = gen_pair(&cfg.synth, index)?;
        let path = dir.join(format!("pair_{index:05}.json"));
        GraphPair::new(&pair.a, &pair.b, Some(&pair.truth)).save(&path)?;
    }
    write_out(
        stdout,
        &format!("wrote {} pairs to {}\n", cfg.synth.pairs, dir.display()),
    )
}

#[derive(Debug, Serialize)]
struct MatchOutput {
    solver: SolverKind,
    attribute: &'static str,
    assignment: Vec<[usize; 2]>,
    objective_trace: Vec<f64>,
    outer_iters: usize,
    sinkhorn_iters_total: usize,
    converged: bool,
    wall_time_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    acc: Option<f64>,
    /// Matched coordinate pairs `[[xa, ya], [xb, yb]]` for plotting.
    lines: Vec<[[f64; 2]; 2]>,
}

pub fn cmd_match(args: &MatchArgs, mut cfg: CliConfig, stdout: &mut dyn Write) -> Result<i32> {
    args.solver_flags.apply(&mut cfg);
    if let Some(attr) = &args.attr {
        cfg.attr = parse_attr(attr)?;
    }
    let solver: SolverKind = args.solver.parse()?;
    cfg.validate()?;

    let pair = GraphPair::load(&args.input)?;
    let (a, b) = pair
        .sides()
        .map_err(|e| Error::Usage(format!("{}: {e}", args.input.display())))?;
    let truth = pair
        .truth_assignment()
        .map_err(|e| Error::Usage(format!("{}: {e}", args.input.display())))?;

    let result = run_solver(solver, &a, &b, cfg.attr, &cfg.bench_settings())?;
    let acc = truth.as_ref().map(|t| accuracy(&result.hard, t)).transpose()?;
    let output = MatchOutput {
        solver,
        attribute: cfg.attr.name(),
        assignment: result.hard.pairs().map(|(i, j)| [i, j]).collect(),
        objective_trace: result.objective_trace.clone(),
        outer_iters: result.outer_iters,
        sinkhorn_iters_total: result.sinkhorn_iters_total,
        converged: result.converged,
        wall_time_ms: result.wall_time_ms,
        acc,
        lines: result
            .hard
            .pairs()
            .map(|(i, j)| [a.points()[i], b.points()[j]])
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&output)?;
    text.push('\n');
    match &args.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Error::io(path, e))?;
            Ok(EXIT_OK)
        }
        None => write_out(stdout, &text),
    }
}

pub fn cmd_bench(args: &BenchArgs, mut cfg: CliConfig, stdout: &mut dyn Write) -> Result<i32> {
    args.synth.apply(&mut cfg);
    args.solver_flags.apply(&mut cfg);
    if let Some(s) = &args.solvers {
        cfg.solvers = parse_list(s)?;
    }
    if let Some(s) = &args.attrs {
        cfg.attrs = parse_list::<String>(s)?
            .iter()
            .map(|a| parse_attr(a))
            .collect::<Result<_>>()?;
    }
    if let Some(f) = &args.format {
        cfg.format = f.parse()?;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(j) = args.jobs {
        cfg.jobs = j;
    }
    if let Some(i) = args.pgd_iters {
        cfg.pgd_iters = i;
    }
    if let Some(s) = args.pgd_step {
        cfg.pgd_step = Some(s);
    }
    cfg.validate()?;
    cfg.synth.validate()?;

    let report = run_benchmark(&cfg.synth, &cfg.solvers, &cfg.attrs, &cfg.bench_settings())?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("bench_out"));
    match cfg.format {
        ReportFormat::Csv => {
            emit_csv_dir(&report, &dir)?;
        }
        ReportFormat::Json => {
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            emit_report(&report, ReportFormat::Json, &dir.join("report.json"))?;
        }
    }
    let mut text = format!("# {}\n# timing: {}\n", report.descriptor_model, report.timing_scope);
    for agg in report.aggregates.values() {
        text.push_str(&summary_line(agg));
        text.push('\n');
    }
    write_out(stdout, &text)
}

struct OracleRow {
    oracle: f64,
    solver: f64,
    gap: f64,
    acc: Option<f64>,
}

fn side_attrs(side: &GraphSide, kind: AttributeKind, normalize: bool) -> Result<EdgeAttributes> {
    Ok(if side.len() < 2 {
        EdgeAttributes::from_matrix(clapgm_core::DMatrix::zeros(side.len(), side.len()), kind)?
    } else {
        edge_attributes(side, kind, normalize)?
    })
}

/// Relative shortfall of `value` below `best`.
pub fn relative_gap(best: f64, value: f64) -> f64 {
    let scale = best.abs().max(f64::MIN_POSITIVE);
    ((best - value) / scale).max(0.0)
}

fn oracle_instance(a: &GraphSide, b: &GraphSide, truth: Option<&HardAssignment>, cfg: &CliConfig) -> Result<OracleRow> {
    let u = node_similarity(a, b, cfg.similarity_scale)?;
    let problem = MatchProblem::new(
        u,
        side_attrs(a, cfg.attr, cfg.normalize)?,
        side_attrs(b, cfg.attr, cfg.normalize)?,
    )?;
    let s = &problem.structure;
    let factored = Structure::Factored {
        h_a: &s.h_a,
        h_b: &s.h_b,
    };
    let lambda = cfg.solver.lambda;
    let (_, best) = brute_force(problem.similarity.values(), factored, lambda, ObjectiveKind::LinearL1)?;
    let result = clapgm_core::solve(&problem, &cfg.solver)?;
    let value = hard_objective_value(&result.hard, problem.similarity.values(), &s.h_a, &s.h_b, lambda)?;
    Ok(OracleRow {
        oracle: best,
        solver: value,
        gap: relative_gap(best, value),
        acc: truth.map(|t| accuracy(&result.hard, t)).transpose()?,
    })
}

pub fn cmd_oracle(
    args: &OracleArgs,
    mut cfg: CliConfig,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32> {
    args.synth.apply(&mut cfg);
    args.solver_flags.apply(&mut cfg);
    if let Some(attr) = &args.attr {
        cfg.attr = parse_attr(attr)?;
    }
    if let Some(g) = args.gap {
        cfg.gap = g;
    }
    if let Some(n) = args.instances {
        cfg.instances = n;
    }
    cfg.validate()?;

    let mut rows = Vec::new();
    if let Some(path) = &args.input {
        let pair = GraphPair::load(path)?;
        let (a, b) = pair
            .sides()
            .map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
        let truth = pair.truth_assignment().map_err(|e| Error::Usage(e.to_string()))?;
        rows.push(oracle_instance(&a, &b, truth.as_ref(), &cfg)?);
    } else {
        if cfg.instances == 0 {
            return Err(Error::Usage("instances must be at least 1".into()));
        }
        cfg.synth.validate()?;
        for index in 0..cfg.instances {
            let pair = gen_pair(&cfg.synth, index)?;
            rows.push(oracle_instance(&pair.a, &pair.b, Some(&pair.truth), &cfg)?);
        }
    }

    let mut text = String::from("instance      oracle      solver         gap    acc\n");
    for (i, r) in rows.iter().enumerate() {
        let acc = r.acc.map_or_else(|| "-".to_string(), |a| format!("{a:.3}"));
        text.push_str(&format!(
            "{i:>8} {:>11.6} {:>11.6} {:>11.3e} {acc:>6}\n",
            r.oracle, r.solver, r.gap
        ));
    }
    let mean_gap = rows.iter().map(|r| r.gap).sum::<f64>() / rows.len() as f64;
    let max_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    let mean_ratio = rows.iter().map(|r| r.solver / r.oracle).sum::<f64>() / rows.len() as f64;
    text.push_str(&format!(
        "mean gap {mean_gap:.3e}  max gap {max_gap:.3e}  mean ratio {mean_ratio:.6}  threshold {:.3e}\n",
        cfg.gap
    ));
    write_out(stdout, &text)?;
    if mean_gap <= cfg.gap {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(stderr, "mean objective gap {mean_gap:.3e} exceeds {:.3e}", cfg.gap);
        Ok(EXIT_GAP)
    }
}
