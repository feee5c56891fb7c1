//! Batch driver around the `rosenau` solver: convergence studies, long-time
//! invariant runs and profile snapshots, all written as versioned CSV.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{RunConfig, SchemeChoice};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "rosenau", version, about = "High-order conservative spectral schemes for Rosenau-type equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Temporal convergence study against the preset's exact solution.
    Converge(RunArgs),
    /// Long run recording the discrete invariants.
    Evolve(RunArgs),
    /// Snapshots of u at requested times.
    Profile(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON run configuration; flags given on the command line win.
    #[arg(long, value_name = "JSON")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeChoice>,
    #[arg(long)]
    pub stages: Option<usize>,
    /// Number of Fourier nodes.
    #[arg(long = "n")]
    pub n_modes: Option<usize>,
    /// Time step; repeat for a convergence study. Fractions like 1/64 work.
    #[arg(long, value_parser = config::parse_real)]
    pub dt: Vec<f64>,
    #[arg(long, value_parser = config::parse_real)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Treat a stalled fixed-point iteration as an error (exit code 4).
    #[arg(long)]
    pub strict: bool,
    /// Start each step's iteration from the previous step's stage rates.
    #[arg(long)]
    pub warm_start: bool,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for independent time steps of `converge`.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Override the preset's nonlinearity exponent.
    #[arg(long)]
    pub p: Option<u32>,
    /// Snapshot time for `profile`; repeatable.
    #[arg(long, value_parser = config::parse_real)]
    pub times: Vec<f64>,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.preset {
            cfg.preset = v.clone();
        }
        if let Some(v) = self.scheme {
            cfg.scheme = v;
        }
        if let Some(v) = self.stages {
            cfg.stages = v;
        }
        if let Some(v) = self.n_modes {
            cfg.n_modes = v;
        }
        if !self.dt.is_empty() {
            cfg.dt = self.dt.clone();
        }
        if let Some(v) = self.t_end {
            cfg.t_end = v;
        }
        if let Some(v) = self.record_every {
            cfg.record_every = v;
        }
        if let Some(v) = self.tol {
            cfg.solver.tol = v;
        }
        if let Some(v) = self.max_iters {
            cfg.solver.max_iters = v;
        }
        if self.strict {
            cfg.solver.strict = true;
        }
        if self.warm_start {
            cfg.solver.warm_start = true;
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if self.p.is_some() {
            cfg.p = self.p;
        }
        if !self.times.is_empty() {
            cfg.times = self.times.clone();
        }
        Ok(cfg)
    }
}

/// Runs one command and returns the text to print on success.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Converge(args) => {
            let report = commands::converge(&args.resolve()?)?;
            Ok(report.summary)
        }
        Command::Evolve(args) => {
            let cfg = args.resolve()?;
            let report = commands::evolve(&cfg)?;
            let mut text = format!(
                "records={} t_final={} max_iterations={} unconverged_steps={}\n",
                report.records, report.final_time, report.stats.max_iters, report.stats.unconverged_steps
            );
            if let Some((e2, einf)) = report.errors {
                text.push_str(&format!("e2={e2:e} einf={einf:e}\n"));
            }
            Ok(text)
        }
        Command::Profile(args) => {
            let plan = commands::profile(&args.resolve()?)?;
            Ok(plan
                .iter()
                .map(|s| format!("t={} step={} offset={:e} -> {}\n", s.time, s.step, s.offset, s.file))
                .collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_config_file() {
        let dir = std::env::temp_dir().join(format!("rosenau-cli-unit-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        std::fs::write(&path, r#"{"preset":"rlw-p3","stages":3,"dt":[0.5,0.25],"solver":{"tol":1e-12}}"#).unwrap();
        let cli = Cli::parse_from(["rosenau", "converge", "--config", path.to_str().unwrap(), "--stages", "1", "--dt", "1/8"]);
        let Command::Converge(args) = &cli.command else { panic!() };
        let cfg = args.resolve().unwrap();
        assert_eq!(cfg.preset, "rlw-p3");
        assert_eq!(cfg.stages, 1);
        assert_eq!(cfg.dt, vec![0.125]);
        assert_eq!(cfg.solver.tol, 1e-12);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
