//! Run configuration: a JSON document mirroring [`RunConfig`], with every
//! field overridable from the command line.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rosenau::tableau::MAX_STAGES;
use rosenau::{gauss_legendre, preset, ButcherTableau, NonConvergencePolicy, ProblemPreset, SolverOptions, SpectralGrid};
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    /// momentum-preserving
    Mp,
    /// energy-preserving (quadratized)
    Ep,
}

impl SchemeChoice {
    pub fn name(self) -> &'static str {
        match self {
            SchemeChoice::Mp => "mp",
            SchemeChoice::Ep => "ep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    /// Fail with exit code 4 instead of warning when an iteration stalls.
    pub strict: bool,
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            tol: d.tol,
            max_iters: d.max_iters,
            strict: false,
            warm_start: d.warm_start,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            on_nonconvergence: if self.strict {
                NonConvergencePolicy::Error
            } else {
                NonConvergencePolicy::WarnAndProceed
            },
            warm_start: self.warm_start,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub preset: String,
    pub scheme: SchemeChoice,
    pub stages: usize,
    pub n_modes: usize,
    /// A single step or a list; `converge` takes the list.
    #[serde(deserialize_with = "one_or_many")]
    pub dt: Vec<f64>,
    pub t_end: f64,
    pub record_every: usize,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    /// Overrides the preset's nonlinearity exponent.
    pub p: Option<u32>,
    /// Snapshot times for `profile`.
    pub times: Vec<f64>,
    /// Worker threads for `converge`.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: String::new(),
            scheme: SchemeChoice::Mp,
            stages: 2,
            n_modes: 512,
            dt: Vec::new(),
            t_end: 1.0,
            record_every: 1,
            solver: SolverConfig::default(),
            output_dir: PathBuf::from("out"),
            p: None,
            times: Vec::new(),
            jobs: 1,
        }
    }
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(f64),
        Many(Vec<f64>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

/// Everything a command needs, built from a validated [`RunConfig`].
#[derive(Debug, Clone)]
pub struct Setup {
    pub problem: ProblemPreset,
    pub grid: SpectralGrid,
    pub tableau: ButcherTableau,
    pub opts: SolverOptions,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
    }

    pub fn setup(&self) -> Result<Setup, CliError> {
        if self.preset.is_empty() {
            return Err(usage("no preset given (use --preset or the config's `preset` field)"));
        }
        let mut problem = preset(&self.preset)?;
        if let Some(p) = self.p {
            problem = problem.with_exponent(p)?;
        }
        if self.scheme == SchemeChoice::Ep && !matches!(problem.params.p, 2 | 3 | 5) {
            return Err(usage(format!(
                "the energy-preserving scheme needs p in {{2, 3, 5}}, got {}",
                problem.params.p
            )));
        }
        if !(1..=MAX_STAGES).contains(&self.stages) {
            return Err(usage(format!("stages must be in 1..={MAX_STAGES}, got {}", self.stages)));
        }
        if let Some(bad) = self.dt.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(usage(format!("time steps must be positive and finite, got {bad}")));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(usage(format!("t_end must be finite and non-negative, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(usage("record_every must be at least 1"));
        }
        if self.jobs == 0 {
            return Err(usage("jobs must be at least 1"));
        }
        let opts = self.solver.options();
        opts.validate()?;
        let grid = SpectralGrid::new(self.n_modes, problem.domain.0, problem.domain.1)?;
        let tableau = gauss_legendre(self.stages)?;
        Ok(Setup {
            problem,
            grid,
            tableau,
            opts,
        })
    }

    /// The single step size used by `evolve` and `profile`.
    pub fn single_dt(&self) -> Result<f64, CliError> {
        match self.dt.as_slice() {
            [dt] => Ok(*dt),
            [] => Err(usage("no time step given (use --dt)")),
            _ => Err(usage(format!(
                "this command takes one time step, got {}",
                self.dt.len()
            ))),
        }
    }
}

/// Parses a real number, also accepting fractions such as `1/64`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match s.split_once('/') {
        Some((num, den)) => {
            let d = parse(den)?;
            if d == 0.0 {
                return Err(format!("`{s}`: zero denominator"));
            }
            Ok(parse(num)? / d)
        }
        None => parse(s),
    }
}
