//! The three batch commands. Each writes its CSVs under the configured
//! output directory and returns a small report for the caller.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use rosenau::diagnostics::{estimate_order, mean_orders};
use rosenau::integrator::step_count;
use rosenau::{error_norms, evolve as run_evolve, qav_init, ConvergenceRow, SolutionState, StepReport};

use crate::config::{RunConfig, SchemeChoice, Setup};
use crate::error::CliError;
use crate::output::{ensure_dir, opt_real, real, write_profile, write_text, CsvFile};

pub const CONVERGE_CSV: &str = "converge.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const INVARIANTS_CSV: &str = "invariants.csv";
pub const PROFILE_CSV: &str = "profile.csv";
pub const ERRORS_CSV: &str = "errors.csv";
pub const PROFILE_INDEX_CSV: &str = "profiles.csv";

fn initial_state(setup: &Setup, scheme: SchemeChoice) -> Result<SolutionState, CliError> {
    let u0 = setup.problem.sample_initial(&setup.grid.nodes);
    Ok(match scheme {
        SchemeChoice::Mp => SolutionState::Plain { u: u0, time: 0.0 },
        SchemeChoice::Ep => SolutionState::Quadratized(qav_init(&u0, setup.problem.params.p)?),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IterationStats {
    pub max_iters: usize,
    pub unconverged_steps: usize,
}

impl IterationStats {
    fn add(&mut self, r: &StepReport) {
        self.max_iters = self.max_iters.max(r.iters);
        if !r.converged {
            self.unconverged_steps += 1;
        }
    }

    fn merge(&mut self, other: IterationStats) {
        self.max_iters = self.max_iters.max(other.max_iters);
        self.unconverged_steps += other.unconverged_steps;
    }
}

#[derive(Debug, Clone)]
pub struct ConvergeReport {
    pub rows: Vec<ConvergenceRow>,
    pub mean_order2: Option<f64>,
    pub mean_orderinf: Option<f64>,
    pub seconds_per_dt: Vec<f64>,
    pub wall_clock: f64,
    pub stats: IterationStats,
    pub summary: String,
}

/// Runs `f` over `items` on up to `jobs` threads, keeping input order.
fn run_parallel<T, F>(items: &[f64], jobs: usize, f: F) -> Vec<Result<T, CliError>>
where
    T: Send,
    F: Fn(f64) -> Result<T, CliError> + Sync,
{
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<T, CliError>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..jobs.min(items.len()).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let result = f(items[i]);
                *slots[i].lock().expect("result slot") = Some(result);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("result slot").expect("every item ran"))
        .collect()
}

pub fn converge(cfg: &RunConfig) -> Result<ConvergeReport, CliError> {
    let setup = cfg.setup()?;
    let exact = setup.problem.exact.ok_or_else(|| {
        CliError::Usage(format!(
            "preset `{}` has no exact solution; converge needs one",
            setup.problem.name
        ))
    })?;
    if cfg.dt.is_empty() {
        return Err(CliError::Usage("converge needs at least one --dt".into()));
    }
    let mut dts = cfg.dt.clone();
    dts.sort_by(|a, b| b.total_cmp(a));
    dts.dedup();
    if dts != cfg.dt {
        log::warn!("time steps reordered to strictly decreasing: {dts:?}");
    }
    for &dt in &dts {
        step_count(0.0, cfg.t_end, dt)?;
    }
    ensure_dir(&cfg.output_dir)?;

    let start = Instant::now();
    let results = run_parallel(&dts, cfg.jobs, |dt| {
        let t0 = Instant::now();
        let initial = initial_state(&setup, cfg.scheme)?;
        let out = run_evolve(
            &setup.grid,
            &setup.problem.params,
            &setup.tableau,
            initial,
            dt,
            cfg.t_end,
            usize::MAX,
            setup.opts,
            |_| Ok(()),
        )?;
        let mut stats = IterationStats::default();
        out.reports.iter().for_each(|r| stats.add(r));
        let (e2, einf) = error_norms(&setup.grid, out.state.u(), |x, t| exact.eval(x, t), cfg.t_end)?;
        Ok((ConvergenceRow::new(dt, e2, einf), t0.elapsed().as_secs_f64(), stats))
    });
    let wall_clock = start.elapsed().as_secs_f64();

    let mut raw = Vec::with_capacity(dts.len());
    let mut seconds_per_dt = Vec::with_capacity(dts.len());
    let mut stats = IterationStats::default();
    for r in results {
        let (row, secs, s) = r?;
        raw.push(row);
        seconds_per_dt.push(secs);
        stats.merge(s);
    }
    let rows = estimate_order(&raw)?;
    let (mean_order2, mean_orderinf) = mean_orders(&rows);

    let mut csv = CsvFile::create(&cfg.output_dir.join(CONVERGE_CSV), &["dt", "e2", "einf", "order2", "orderinf"])?;
    for row in &rows {
        csv.row(&[
            real(row.dt),
            real(row.e2),
            real(row.einf),
            opt_real(row.order2),
            opt_real(row.orderinf),
        ])?;
    }
    csv.finish()?;

    let fmt_order = |o: Option<f64>| o.map_or_else(|| "undefined".to_string(), |v| format!("{v:.6}"));
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "preset={} scheme={} stages={} n_modes={} t_end={}",
        setup.problem.name,
        cfg.scheme.name(),
        cfg.stages,
        cfg.n_modes,
        cfg.t_end
    );
    let _ = writeln!(summary, "mean_order2={}", fmt_order(mean_order2));
    let _ = writeln!(summary, "mean_orderinf={}", fmt_order(mean_orderinf));
    let _ = writeln!(summary, "max_iterations={}", stats.max_iters);
    let _ = writeln!(summary, "unconverged_steps={}", stats.unconverged_steps);
    for (row, secs) in rows.iter().zip(&seconds_per_dt) {
        let _ = writeln!(summary, "dt={} wall_clock_s={secs:.3}", row.dt);
    }
    let _ = writeln!(summary, "wall_clock_s={wall_clock:.3}");
    write_text(&cfg.output_dir.join(SUMMARY_TXT), &summary)?;

    Ok(ConvergeReport {
        rows,
        mean_order2,
        mean_orderinf,
        seconds_per_dt,
        wall_clock,
        stats,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveReport {
    pub records: usize,
    pub final_time: f64,
    pub errors: Option<(f64, f64)>,
    pub stats: IterationStats,
}

pub fn evolve(cfg: &RunConfig) -> Result<EvolveReport, CliError> {
    let setup = cfg.setup()?;
    let dt = cfg.single_dt()?;
    let steps = step_count(0.0, cfg.t_end, dt)?;
    ensure_dir(&cfg.output_dir)?;
    let dir = &cfg.output_dir;

    let mut csv = CsvFile::create(
        &dir.join(INVARIANTS_CSV),
        &["t", "mass", "momentum", "hamiltonian", "quad_energy", "qav_defect", "iters", "residual"],
    )?;
    let mut records = 0;
    let mut write_failure: Option<CliError> = None;
    let outcome = run_evolve(
        &setup.grid,
        &setup.problem.params,
        &setup.tableau,
        initial_state(&setup, cfg.scheme)?,
        dt,
        cfg.t_end,
        cfg.record_every,
        setup.opts,
        |obs| {
            let rec = obs.record;
            let row = [
                real(rec.time),
                real(rec.mass),
                real(rec.momentum),
                real(rec.hamiltonian),
                opt_real(rec.quad_energy),
                opt_real(rec.qav_defect),
                obs.report.map(|r| r.iters.to_string()).unwrap_or_default(),
                opt_real(obs.report.map(|r| r.final_residual)),
            ];
            if let Err(e) = csv.row(&row) {
                let msg = e.to_string();
                write_failure = Some(e);
                return Err(msg.into());
            }
            records += 1;
            Ok(())
        },
    );
    let outcome = match (outcome, write_failure) {
        (_, Some(e)) => return Err(e),
        (r, None) => r?,
    };
    csv.finish()?;

    let mut stats = IterationStats::default();
    outcome.reports.iter().for_each(|r| stats.add(r));
    let u = outcome.state.u();
    let final_time = outcome.state.time();
    if steps == 0 {
        CsvFile::create(&dir.join(PROFILE_CSV), &["x", "u"])?.finish()?;
    } else {
        write_profile(&dir.join(PROFILE_CSV), &setup.grid.nodes, u)?;
    }
    let mut errors = None;
    if let Some(exact) = setup.problem.exact {
        let mut csv = CsvFile::create(&dir.join(ERRORS_CSV), &["t", "e2", "einf"])?;
        if steps > 0 {
            let (e2, einf) = error_norms(&setup.grid, u, |x, t| exact.eval(x, t), final_time)?;
            csv.row(&[real(final_time), real(e2), real(einf)])?;
            errors = Some((e2, einf));
        }
        csv.finish()?;
    }
    Ok(EvolveReport {
        records,
        final_time,
        errors,
        stats,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub requested: f64,
    pub step: usize,
    pub time: f64,
    /// `time − requested`.
    pub offset: f64,
    pub file: String,
}

/// Snaps requested times to whole steps, keeping the first request for each
/// step.
pub fn plan_snapshots(times: &[f64], dt: f64) -> Result<Vec<Snapshot>, CliError> {
    if times.is_empty() {
        return Err(CliError::Usage("profile needs at least one --times value".into()));
    }
    let mut by_step: BTreeMap<usize, Snapshot> = BTreeMap::new();
    for &t in times {
        if !(t.is_finite() && t >= 0.0) {
            return Err(CliError::Usage(format!("snapshot times must be finite and non-negative, got {t}")));
        }
        let step = (t / dt).round() as usize;
        let time = step as f64 * dt;
        let offset = time - t;
        if offset.abs() > 1e-9 * t.abs().max(1.0) {
            log::warn!("time {t} is not a multiple of dt = {dt}; snapped to step {step} (t = {time})");
        }
        if by_step.contains_key(&step) {
            log::warn!("duplicate snapshot time {t} (step {step}) ignored");
            continue;
        }
        by_step.insert(
            step,
            Snapshot {
                requested: t,
                step,
                time,
                offset,
                file: format!("profile_{step:08}.csv"),
            },
        );
    }
    Ok(by_step.into_values().collect())
}

pub fn profile(cfg: &RunConfig) -> Result<Vec<Snapshot>, CliError> {
    let setup = cfg.setup()?;
    let dt = cfg.single_dt()?;
    let plan = plan_snapshots(&cfg.times, dt)?;
    ensure_dir(&cfg.output_dir)?;
    let dir = &cfg.output_dir;
    let wanted: BTreeMap<usize, &Snapshot> = plan.iter().map(|s| (s.step, s)).collect();
    let last = plan.last().map_or(0, |s| s.step);

    let initial = initial_state(&setup, cfg.scheme)?;
    if let Some(s) = wanted.get(&0) {
        write_profile(&dir.join(&s.file), &setup.grid.nodes, initial.u())?;
    }
    if last > 0 {
        let mut write_failure: Option<CliError> = None;
        let result = run_evolve(
            &setup.grid,
            &setup.problem.params,
            &setup.tableau,
            initial,
            dt,
            last as f64 * dt,
            1,
            setup.opts,
            |obs| {
                if obs.step == 0 {
                    return Ok(());
                }
                if let Some(s) = wanted.get(&obs.step) {
                    if let Err(e) = write_profile(&dir.join(&s.file), &setup.grid.nodes, obs.state.u()) {
                        let msg = e.to_string();
                        write_failure = Some(e);
                        return Err(msg.into());
                    }
                }
                Ok(())
            },
        );
        if let Some(e) = write_failure {
            return Err(e);
        }
        result?;
    }

    let mut index = CsvFile::create(&dir.join(PROFILE_INDEX_CSV), &["requested_t", "step", "t", "offset", "file"])?;
    for s in &plan {
        index.row(&[
            real(s.requested),
            s.step.to_string(),
            real(s.time),
            real(s.offset),
            s.file.clone(),
        ])?;
    }
    index.finish()?;
    Ok(plan)
}
