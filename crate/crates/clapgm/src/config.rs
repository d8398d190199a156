//! Run configuration: built-in defaults, overridden by a key-value config
//! file, overridden by command-line flags.
//!
//! Config files hold one `key = value` per line; `#` starts a comment and
//! list values are comma separated. Unknown keys are rejected.

use std::path::PathBuf;

use clapgm_core::{AttributeKind, PgdParams, SolverParams};

use crate::bench::{BenchSettings, SolverKind};
use crate::error::{Error, Result};
use crate::report::ReportFormat;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub solver: SolverParams,
    pub pgd_iters: usize,
    pub pgd_step: Option<f64>,
    pub attr: AttributeKind,
    pub attrs: Vec<AttributeKind>,
    pub solvers: Vec<SolverKind>,
    pub normalize: bool,
    pub similarity_scale: f64,
    pub synth: SynthConfig,
    pub format: ReportFormat,
    pub out: Option<PathBuf>,
    pub jobs: usize,
    pub gap: f64,
    pub instances: usize,
}

impl Default for CliConfig {
    fn default() -> Self {
        Self {
            solver: SolverParams::default(),
            pgd_iters: PgdParams::default().iters,
            pgd_step: None,
            attr: AttributeKind::Length,
            attrs: vec![AttributeKind::Length, AttributeKind::Adjacency],
            solvers: vec![SolverKind::Clap, SolverKind::Pgd],
            normalize: true,
            similarity_scale: 1.0,
            synth: SynthConfig::default(),
            format: ReportFormat::Csv,
            out: None,
            jobs: 1,
            gap: 0.01,
            instances: 100,
        }
    }
}

pub const KEYS: &[&str] = &[
    "lambda",
    "epsilon",
    "sinkhorn_max_iters",
    "sinkhorn_tol",
    "outer_max_iters",
    "outer_tol",
    "pgd_iters",
    "pgd_step",
    "attr",
    "attrs",
    "solvers",
    "normalize",
    "similarity_scale",
    "pairs",
    "nodes",
    "width",
    "height",
    "descriptor_dim",
    "descriptor_noise",
    "seed",
    "format",
    "out",
    "jobs",
    "gap",
    "instances",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl CliConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "lambda" => self.solver.lambda = parse(key, value)?,
            "epsilon" => self.solver.epsilon = parse(key, value)?,
            "sinkhorn_max_iters" => self.solver.sinkhorn_max_iters = parse(key, value)?,
            "sinkhorn_tol" => self.solver.sinkhorn_tol = parse(key, value)?,
            "outer_max_iters" => self.solver.outer_max_iters = parse(key, value)?,
            "outer_tol" => self.solver.outer_tol = parse(key, value)?,
            "pgd_iters" => self.pgd_iters = parse(key, value)?,
            "pgd_step" => self.pgd_step = Some(parse(key, value)?),
            "attr" => self.attr = parse(key, value)?,
            "attrs" => self.attrs = parse_list(key, value)?,
            "solvers" => self.solvers = parse_list(key, value)?,
            "normalize" => self.normalize = parse(key, value)?,
            "similarity_scale" => self.similarity_scale = parse(key, value)?,
            "pairs" => self.synth.pairs = parse(key, value)?,
            "nodes" => self.synth.nodes = parse(key, value)?,
            "width" => self.synth.width = parse(key, value)?,
            "height" => self.synth.height = parse(key, value)?,
            "descriptor_dim" => self.synth.descriptor_dim = parse(key, value)?,
            "descriptor_noise" => self.synth.descriptor_noise = parse(key, value)?,
            "seed" => self.synth.seed = parse(key, value)?,
            "format" => self.format = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "jobs" => self.jobs = parse(key, value)?,
            "gap" => self.gap = parse(key, value)?,
            "instances" => self.instances = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate().map_err(|e| Error::Usage(e.to_string()))?;
        if self.jobs == 0 {
            return Err(Error::Usage("jobs must be at least 1".into()));
        }
        if self.pgd_iters == 0 {
            return Err(Error::Usage("pgd_iters must be at least 1".into()));
        }
        if !(self.similarity_scale > 0.0) {
            return Err(Error::Usage("similarity_scale must be positive".into()));
        }
        if !(self.gap >= 0.0) {
            return Err(Error::Usage("gap must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn pgd_params(&self) -> PgdParams {
        PgdParams {
            lambda: self.solver.lambda,
            step: self.pgd_step,
            iters: self.pgd_iters,
            sinkhorn_max_iters: self.solver.sinkhorn_max_iters,
            sinkhorn_tol: self.solver.sinkhorn_tol,
            ..PgdParams::default()
        }
    }

    pub fn bench_settings(&self) -> BenchSettings {
        BenchSettings {
            solver: self.solver,
            pgd: self.pgd_params(),
            normalize_lengths: self.normalize,
            similarity_scale: self.similarity_scale,
            jobs: self.jobs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_apply() {
        let mut cfg = CliConfig::default();
        cfg.apply_text("# run\nlambda = 0.5\nattrs = length, inner_product\nsolvers=clap\n\nseed = 9 # trailing\n")
            .unwrap();
        assert_eq!(cfg.solver.lambda, 0.5);
        assert_eq!(cfg.attrs, vec![AttributeKind::Length, AttributeKind::InnerProduct]);
        assert_eq!(cfg.solvers, vec![SolverKind::Clap]);
        assert_eq!(cfg.synth.seed, 9);
    }

    #[test]
    fn unknown_and_malformed_rejected() {
        let mut cfg = CliConfig::default();
        assert!(matches!(cfg.apply_text("lamda = 1"), Err(Error::Config(_))));
        assert!(matches!(cfg.apply_text("lambda 1"), Err(Error::Config(_))));
        assert!(matches!(cfg.apply_text("epsilon = abc"), Err(Error::Config(_))));
    }

    #[test]
    fn every_key_is_settable() {
        let samples = [
            ("attr", "adjacency"),
            ("attrs", "length"),
            ("solvers", "pgd"),
            ("normalize", "false"),
            ("format", "json"),
            ("out", "x"),
        ];
        for key in KEYS {
            let value = samples.iter().find(|(k, _)| k == key).map_or("1", |(_, v)| v);
            CliConfig::default().set(key, value).unwrap();
        }
    }
}
