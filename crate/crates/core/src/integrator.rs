//! Fully discrete Runge–Kutta stepping for both formulations.
//!
//! Stage equations are solved by a fixed-point iteration in which every
//! linear term is moved to the left-hand side. Because all linear operators
//! are diagonal in Fourier space, the left-hand side decouples into one
//! `s×s` complex system per Fourier mode; those systems depend only on the
//! step size and are factored once per distinct `dt`. The nonlinear terms
//! are lagged one sweep.
//!
//! Momentum form, per mode `k`:
//! `(a_h δ_ij + τ a_ij (κλ + bλ³)) K̂_j = −F̂_i`,
//! `F_i = κD₁Uⁿ + bD₃Uⁿ + (pβ/(p+1))[(U^{ni})^{p−1}·D₁U^{ni} + D₁((U^{ni})^p)]`.
//!
//! Quadratized form, per mode `k`:
//! `(δ_ij − τ a_ij j_h (κ + bλ̃²)) K̂_j = j_h [(κ + bλ̃²)Ûⁿ + N̂_i]`,
//! with `j_h = −λ/a_h` and `N_i` the nonlinear gradient evaluated at the
//! stage values `U^{ni}`, `Q^{ni}`. The auxiliary stage values are explicit
//! functions of the current `K` iterate and are rebuilt every sweep.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::diagnostics::{invariants, InvariantRecord};
use crate::dynamics::{ep_nonlinear, mp_nonlinear_parts, Auxiliary, EquationParams, QavState};
use crate::error::{check_len, Error, Result};
use crate::spectral::{FourierWorkspace, SpectralGrid};
use crate::tableau::ButcherTableau;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonConvergencePolicy {
    /// Log a warning and advance with the last iterate.
    WarnAndProceed,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stopping bound on `max_i ‖K_i^{l+1} − K_i^l‖_∞`.
    pub tol: f64,
    pub max_iters: usize,
    pub on_nonconvergence: NonConvergencePolicy,
    /// Start the iteration from the previous step's stage velocities instead
    /// of `K_i⁰ = Uⁿ`.
    pub warm_start: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-14,
            max_iters: 30,
            on_nonconvergence: NonConvergencePolicy::WarnAndProceed,
            warm_start: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config {
                field: "tol",
                reason: format!("must be positive and finite, got {}", self.tol),
            });
        }
        if self.max_iters == 0 {
            return Err(Error::Config {
                field: "max_iters",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub iters: usize,
    pub final_residual: f64,
    pub converged: bool,
}

/// Stage quantities of the most recent step, evaluated at the final iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct StageData {
    pub dt: f64,
    pub k: Vec<Vec<f64>>,
    pub u_stage: Vec<Vec<f64>>,
    /// `L_i = 2U^{ni}·K_i` (quadratized form only).
    pub l: Option<Vec<Vec<f64>>>,
    /// `q2` rates for `p = 5`.
    pub m: Option<Vec<Vec<f64>>>,
    /// `Q^{ni}` (or `Q1^{ni}` for `p = 5`).
    pub q_stage: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Momentum,
    Energy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionState {
    Plain { u: Vec<f64>, time: f64 },
    Quadratized(QavState),
}

impl SolutionState {
    pub fn u(&self) -> &[f64] {
        match self {
            SolutionState::Plain { u, .. } => u,
            SolutionState::Quadratized(s) => &s.u,
        }
    }

    pub fn time(&self) -> f64 {
        match self {
            SolutionState::Plain { time, .. } => *time,
            SolutionState::Quadratized(s) => s.time,
        }
    }

    pub fn aux(&self) -> Option<&Auxiliary> {
        match self {
            SolutionState::Plain { .. } => None,
            SolutionState::Quadratized(s) => Some(&s.aux),
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            SolutionState::Plain { .. } => Scheme::Momentum,
            SolutionState::Quadratized(_) => Scheme::Energy,
        }
    }
}

struct StageSystem {
    scheme: Scheme,
    dt: f64,
    /// Per-mode inverses, `inv[k·s² + i·s + j]`.
    inv: Vec<Complex64>,
}

/// Auxiliary stage values with their `L` and (for `p = 5`) `M` rates.
type AuxStages = (Vec<Auxiliary>, Vec<Vec<f64>>, Option<Vec<Vec<f64>>>);

/// A stepping session: FFT workspace, cached stage factorizations and
/// buffers for one grid, equation and tableau. Single-threaded; run several
/// sessions for parallel work.
pub struct Integrator<'a> {
    grid: &'a SpectralGrid,
    params: &'a EquationParams,
    tableau: &'a ButcherTableau,
    opts: SolverOptions,
    ws: FourierWorkspace,
    helmholtz: Vec<f64>,
    j_symbol: Vec<Complex64>,
    system: Option<StageSystem>,
    previous_k: Option<Vec<Vec<f64>>>,
    last_stages: Option<StageData>,
}

impl<'a> Integrator<'a> {
    pub fn new(
        grid: &'a SpectralGrid,
        params: &'a EquationParams,
        tableau: &'a ButcherTableau,
        opts: SolverOptions,
    ) -> Result<Self> {
        params.validate()?;
        opts.validate()?;
        Ok(Self {
            grid,
            params,
            tableau,
            opts,
            ws: FourierWorkspace::for_grid(grid),
            helmholtz: grid.helmholtz_symbol(params),
            j_symbol: grid.hamiltonian_operator_symbol(params),
            system: None,
            previous_k: None,
            last_stages: None,
        })
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn last_stages(&self) -> Option<&StageData> {
        self.last_stages.as_ref()
    }

    fn check_dt(dt: f64) -> Result<()> {
        if dt.is_finite() && dt != 0.0 {
            Ok(())
        } else {
            Err(Error::Config {
                field: "dt",
                reason: format!("time step must be finite and non-zero, got {dt}"),
            })
        }
    }

    fn prepare_system(&mut self, scheme: Scheme, dt: f64) -> Result<()> {
        if let Some(sys) = &self.system {
            if sys.scheme == scheme && sys.dt == dt {
                return Ok(());
            }
        }
        let s = self.tableau.s;
        let n = self.grid.n;
        let mut inv = Vec::with_capacity(n * s * s);
        for k in 0..n {
            let lambda = self.grid.odd_symbol[k];
            let (diag, coupling) = match scheme {
                Scheme::Momentum => {
                    let z = self.params.kappa * lambda + self.params.b_disp * lambda.powu(3);
                    (Complex64::new(self.helmholtz[k], 0.0), z * dt)
                }
                Scheme::Energy => {
                    let even_sq = (self.grid.even_symbol[k] * self.grid.even_symbol[k]).re;
                    let w = self.j_symbol[k] * (self.params.kappa + self.params.b_disp * even_sq);
                    (Complex64::new(1.0, 0.0), -w * dt)
                }
            };
            let m = DMatrix::from_fn(s, s, |i, j| {
                let d = if i == j { diag } else { Complex64::new(0.0, 0.0) };
                d + coupling * self.tableau.a[i][j]
            });
            let mi = m.lu().try_inverse().ok_or_else(|| {
                Error::Numeric(format!("singular stage system at Fourier mode {k}"))
            })?;
            for i in 0..s {
                for j in 0..s {
                    inv.push(mi[(i, j)]);
                }
            }
        }
        self.system = Some(StageSystem { scheme, dt, inv });
        Ok(())
    }

    fn initial_iterate(&self, u_n: &[f64]) -> Vec<Vec<f64>> {
        let s = self.tableau.s;
        if self.opts.warm_start {
            if let Some(prev) = &self.previous_k {
                if prev.len() == s && prev[0].len() == u_n.len() {
                    return prev.clone();
                }
            }
        }
        vec![u_n.to_vec(); s]
    }

    /// `U^{ni} = Uⁿ + τ Σ_j a_ij K_j` for every stage.
    fn stage_values(&self, base: &[f64], rates: &[Vec<f64>], dt: f64, out: &mut [Vec<f64>]) {
        for (i, row) in self.tableau.a.iter().enumerate() {
            let target = &mut out[i];
            target.copy_from_slice(base);
            for (aij, r) in row.iter().zip(rates) {
                let w = dt * aij;
                for (t, v) in target.iter_mut().zip(r) {
                    *t += w * v;
                }
            }
        }
    }

    fn weighted_update(&self, base: &[f64], rates: &[Vec<f64>], dt: f64) -> Vec<f64> {
        let mut out = base.to_vec();
        for (bi, r) in self.tableau.b.iter().zip(rates) {
            let w = dt * bi;
            for (o, v) in out.iter_mut().zip(r) {
                *o += w * v;
            }
        }
        out
    }

    /// Applies the per-mode stage inverses: `out_i = scale · Σ_j inv_ij rhs_j`.
    fn solve_modes(&self, rhs: &[Vec<Complex64>], scale: f64, out: &mut [Vec<Complex64>]) {
        let s = self.tableau.s;
        let inv = &self.system.as_ref().expect("stage system prepared").inv;
        for k in 0..self.grid.n {
            let block = &inv[k * s * s..(k + 1) * s * s];
            for i in 0..s {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..s {
                    acc += block[i * s + j] * rhs[j][k];
                }
                out[i][k] = acc * scale;
            }
        }
    }

    fn finish_iteration(
        &self,
        iters: usize,
        residual: f64,
        converged: bool,
    ) -> Result<StepReport> {
        if !converged {
            match self.opts.on_nonconvergence {
                NonConvergencePolicy::Error => {
                    return Err(Error::NonConvergence { iters, residual })
                }
                NonConvergencePolicy::WarnAndProceed => log::warn!(
                    "fixed-point iteration stopped after {iters} sweeps with residual {residual:e}"
                ),
            }
        }
        Ok(StepReport {
            iters,
            final_residual: residual,
            converged,
        })
    }

    /// One step of the momentum-preserving scheme.
    pub fn step_momentum(&mut self, u_n: &[f64], dt: f64) -> Result<(Vec<f64>, StepReport)> {
        check_len(self.grid.n, u_n.len())?;
        Self::check_dt(dt)?;
        self.prepare_system(Scheme::Momentum, dt)?;
        let n = self.grid.n;
        let s = self.tableau.s;
        let zero = Complex64::new(0.0, 0.0);
        let lambda = self.grid.odd_symbol.clone();
        let (kappa, b) = (self.params.kappa, self.params.b_disp);

        let u_hat = self.ws.forward(u_n)?;
        let linear_hat: Vec<Complex64> = (0..n)
            .map(|k| (kappa * lambda[k] + b * lambda[k].powu(3)) * u_hat[k])
            .collect();

        let mut k_cur = self.initial_iterate(u_n);
        let mut k_new = vec![vec![0.0; n]; s];
        let mut stages = vec![vec![0.0; n]; s];
        let mut flux_hat = vec![vec![zero; n]; s];
        let mut k_hat = vec![vec![zero; n]; s];
        let mut spec = vec![zero; n];
        let mut spec2 = vec![zero; n];
        let mut du = vec![0.0; n];
        let mut product = vec![0.0; n];
        let mut power = vec![0.0; n];

        let mut iters = 0;
        let mut residual = f64::INFINITY;
        let mut converged = false;
        while iters < self.opts.max_iters {
            iters += 1;
            self.stage_values(u_n, &k_cur, dt, &mut stages);
            for i in 0..s {
                self.ws.forward_into(&stages[i], &mut spec)?;
                for (c, l) in spec.iter_mut().zip(&lambda) {
                    *c *= l;
                }
                self.ws.inverse_into(&spec, &mut du)?;
                mp_nonlinear_parts(self.params, &stages[i], &du, &mut product, &mut power);
                self.ws.forward_into(&product, &mut spec)?;
                self.ws.forward_into(&power, &mut spec2)?;
                for k in 0..n {
                    flux_hat[i][k] = linear_hat[k] + spec[k] + lambda[k] * spec2[k];
                }
            }
            self.solve_modes(&flux_hat, -1.0, &mut k_hat);
            residual = 0.0;
            for i in 0..s {
                self.ws.inverse_into(&k_hat[i], &mut k_new[i])?;
                for (a, b) in k_new[i].iter().zip(&k_cur[i]) {
                    if !a.is_finite() {
                        return Err(Error::Divergence { iter: iters });
                    }
                    residual = residual.max((a - b).abs());
                }
            }
            std::mem::swap(&mut k_cur, &mut k_new);
            if residual < self.opts.tol {
                converged = true;
                break;
            }
        }
        let report = self.finish_iteration(iters, residual, converged)?;

        self.stage_values(u_n, &k_cur, dt, &mut stages);
        let u_next = self.weighted_update(u_n, &k_cur, dt);
        if u_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iter: iters });
        }
        self.last_stages = Some(StageData {
            dt,
            k: k_cur.clone(),
            u_stage: stages,
            l: None,
            m: None,
            q_stage: None,
        });
        self.previous_k = Some(k_cur);
        Ok((u_next, report))
    }

    /// Auxiliary stage values and rates for the current `K` iterate.
    /// Returns `(aux stage values, L, M)`.
    fn auxiliary_stages(
        &self,
        aux: &Auxiliary,
        stages: &[Vec<f64>],
        k: &[Vec<f64>],
        dt: f64,
    ) -> AuxStages {
        let s = self.tableau.s;
        let n = self.grid.n;
        let l: Vec<Vec<f64>> = (0..s)
            .map(|i| stages[i].iter().zip(&k[i]).map(|(u, k)| 2.0 * u * k).collect())
            .collect();
        match aux {
            Auxiliary::Square { q } => {
                let mut q_stage = vec![vec![0.0; n]; s];
                self.stage_values(q, &l, dt, &mut q_stage);
                let aux_stage = q_stage.into_iter().map(|q| Auxiliary::Square { q }).collect();
                (aux_stage, l, None)
            }
            Auxiliary::Chain { q1, q2 } => {
                let mut q1_stage = vec![vec![0.0; n]; s];
                self.stage_values(q1, &l, dt, &mut q1_stage);
                let m: Vec<Vec<f64>> = (0..s)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let (u, kk) = (stages[i][j], k[i][j]);
                                kk * q1_stage[i][j] + 2.0 * u * u * kk
                            })
                            .collect()
                    })
                    .collect();
                let mut q2_stage = vec![vec![0.0; n]; s];
                self.stage_values(q2, &m, dt, &mut q2_stage);
                let aux_stage = q1_stage
                    .into_iter()
                    .zip(q2_stage)
                    .map(|(q1, q2)| Auxiliary::Chain { q1, q2 })
                    .collect();
                (aux_stage, l, Some(m))
            }
        }
    }

    /// One step of the energy-preserving (quadratized) scheme.
    pub fn step_energy(&mut self, state: &QavState, dt: f64) -> Result<(QavState, StepReport)> {
        state.check(self.params.p)?;
        check_len(self.grid.n, state.u.len())?;
        Self::check_dt(dt)?;
        self.prepare_system(Scheme::Energy, dt)?;
        let n = self.grid.n;
        let s = self.tableau.s;
        let zero = Complex64::new(0.0, 0.0);
        let (kappa, b) = (self.params.kappa, self.params.b_disp);
        let u_n = &state.u;

        let u_hat = self.ws.forward(u_n)?;
        let linear_hat: Vec<Complex64> = (0..n)
            .map(|k| {
                let even_sq = (self.grid.even_symbol[k] * self.grid.even_symbol[k]).re;
                (kappa + b * even_sq) * u_hat[k]
            })
            .collect();

        let mut k_cur = self.initial_iterate(u_n);
        let mut k_new = vec![vec![0.0; n]; s];
        let mut stages = vec![vec![0.0; n]; s];
        let mut rhs_hat = vec![vec![zero; n]; s];
        let mut k_hat = vec![vec![zero; n]; s];
        let mut spec = vec![zero; n];

        let mut iters = 0;
        let mut residual = f64::INFINITY;
        let mut converged = false;
        while iters < self.opts.max_iters {
            iters += 1;
            self.stage_values(u_n, &k_cur, dt, &mut stages);
            let (aux_stage, _, _) = self.auxiliary_stages(&state.aux, &stages, &k_cur, dt);
            for i in 0..s {
                let nonlinear = ep_nonlinear(self.params, &stages[i], &aux_stage[i])?;
                self.ws.forward_into(&nonlinear, &mut spec)?;
                for k in 0..n {
                    rhs_hat[i][k] = self.j_symbol[k] * (linear_hat[k] + spec[k]);
                }
            }
            self.solve_modes(&rhs_hat, 1.0, &mut k_hat);
            residual = 0.0;
            for i in 0..s {
                self.ws.inverse_into(&k_hat[i], &mut k_new[i])?;
                for (a, b) in k_new[i].iter().zip(&k_cur[i]) {
                    if !a.is_finite() {
                        return Err(Error::Divergence { iter: iters });
                    }
                    residual = residual.max((a - b).abs());
                }
            }
            std::mem::swap(&mut k_cur, &mut k_new);
            if residual < self.opts.tol {
                converged = true;
                break;
            }
        }
        let report = self.finish_iteration(iters, residual, converged)?;

        self.stage_values(u_n, &k_cur, dt, &mut stages);
        let (aux_stage, l, m) = self.auxiliary_stages(&state.aux, &stages, &k_cur, dt);
        let u_next = self.weighted_update(u_n, &k_cur, dt);
        let aux_next = match (&state.aux, &m) {
            (Auxiliary::Square { q }, _) => Auxiliary::Square {
                q: self.weighted_update(q, &l, dt),
            },
            (Auxiliary::Chain { q1, q2 }, Some(m)) => Auxiliary::Chain {
                q1: self.weighted_update(q1, &l, dt),
                q2: self.weighted_update(q2, m, dt),
            },
            (Auxiliary::Chain { .. }, None) => unreachable!("chain auxiliaries always carry q2 rates"),
        };
        if u_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iter: iters });
        }
        let q_stage = aux_stage
            .into_iter()
            .map(|a| match a {
                Auxiliary::Square { q } => q,
                Auxiliary::Chain { q1, .. } => q1,
            })
            .collect();
        self.last_stages = Some(StageData {
            dt,
            k: k_cur.clone(),
            u_stage: stages,
            l: Some(l),
            m,
            q_stage: Some(q_stage),
        });
        self.previous_k = Some(k_cur);
        Ok((
            QavState {
                u: u_next,
                aux: aux_next,
                time: state.time + dt,
            },
            report,
        ))
    }

    /// Advances either kind of state by one step.
    pub fn step(&mut self, state: &SolutionState, dt: f64) -> Result<(SolutionState, StepReport)> {
        match state {
            SolutionState::Plain { u, time } => {
                let (u, report) = self.step_momentum(u, dt)?;
                Ok((
                    SolutionState::Plain {
                        u,
                        time: time + dt,
                    },
                    report,
                ))
            }
            SolutionState::Quadratized(q) => {
                let (next, report) = self.step_energy(q, dt)?;
                Ok((SolutionState::Quadratized(next), report))
            }
        }
    }
}

/// One momentum-preserving step with a throwaway session.
pub fn step_momentum(
    grid: &SpectralGrid,
    params: &EquationParams,
    tableau: &ButcherTableau,
    u_n: &[f64],
    dt: f64,
    opts: SolverOptions,
) -> Result<(Vec<f64>, StepReport)> {
    Integrator::new(grid, params, tableau, opts)?.step_momentum(u_n, dt)
}

/// One energy-preserving step with a throwaway session.
pub fn step_energy(
    grid: &SpectralGrid,
    params: &EquationParams,
    tableau: &ButcherTableau,
    state: &QavState,
    dt: f64,
    opts: SolverOptions,
) -> Result<(QavState, StepReport)> {
    Integrator::new(grid, params, tableau, opts)?.step_energy(state, dt)
}

/// What an [`evolve`] observer sees at a recording point.
#[derive(Debug)]
pub struct Observation<'s> {
    pub step: usize,
    pub state: &'s SolutionState,
    pub record: &'s InvariantRecord,
    /// Report of the step that produced `state`; `None` for the initial state.
    pub report: Option<&'s StepReport>,
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub state: SolutionState,
    pub reports: Vec<StepReport>,
}

pub type ObserverResult = std::result::Result<(), Box<dyn std::error::Error + Send + Sync>>;

/// Whole number of steps taking `from` to `to` with step `dt`.
pub fn step_count(from: f64, to: f64, dt: f64) -> Result<usize> {
    let span = to - from;
    if span == 0.0 {
        return Ok(0);
    }
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::Config {
            field: "dt",
            reason: format!("time step must be finite and non-zero, got {dt}"),
        });
    }
    let ratio = span / dt;
    let steps = ratio.round();
    if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Err(Error::Config {
            field: "t_end",
            reason: format!(
                "span {span} from t = {from} is not a positive whole number of steps of {dt}"
            ),
        });
    }
    Ok(steps as usize)
}

/// Steps `initial` to `t_end`, calling `observer` at step 0, every
/// `record_every` steps and at the final step. The scheme follows the
/// state variant. `t_end` equal to the initial time returns the state
/// unchanged without calling the observer.
#[allow(clippy::too_many_arguments)]
pub fn evolve<F>(
    grid: &SpectralGrid,
    params: &EquationParams,
    tableau: &ButcherTableau,
    initial: SolutionState,
    dt: f64,
    t_end: f64,
    record_every: usize,
    opts: SolverOptions,
    mut observer: F,
) -> Result<EvolveOutcome>
where
    F: FnMut(&Observation<'_>) -> ObserverResult,
{
    if record_every == 0 {
        return Err(Error::Config {
            field: "record_every",
            reason: "must be at least 1".into(),
        });
    }
    let t0 = initial.time();
    let steps = step_count(t0, t_end, dt)?;
    if steps == 0 {
        return Ok(EvolveOutcome {
            state: initial,
            reports: Vec::new(),
        });
    }
    let mut session = Integrator::new(grid, params, tableau, opts)?;
    let mut diag_ws = FourierWorkspace::for_grid(grid);
    let mut notify = |step: usize, state: &SolutionState, report: Option<&StepReport>| {
        let record = invariants(grid, &mut diag_ws, params, state)?;
        observer(&Observation {
            step,
            state,
            record: &record,
            report,
        })
        .map_err(|e| Error::Observer(e.to_string()))
    };

    notify(0, &initial, None)?;
    let mut state = initial;
    let mut reports = Vec::with_capacity(steps);
    for step in 1..=steps {
        let (mut next, report) = session.step(&state, dt)?;
        // absolute times avoid drift from repeated addition
        let t = t0 + step as f64 * dt;
        match &mut next {
            SolutionState::Plain { time, .. } => *time = t,
            SolutionState::Quadratized(q) => q.time = t,
        }
        state = next;
        reports.push(report);
        if step % record_every == 0 || step == steps {
            notify(step, &state, Some(&report))?;
        }
    }
    Ok(EvolveOutcome { state, reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{qav_defect, qav_init};
    use crate::tableau::gauss_legendre;

    fn linear_params() -> EquationParams {
        EquationParams {
            kappa: 1.0,
            delta: 0.5,
            b_disp: 0.0,
            alpha: 0.3,
            beta: 0.0,
            p: 2,
        }
    }

    fn bump(grid: &SpectralGrid) -> Vec<f64> {
        grid.nodes.iter().map(|x| 0.5 * (-(x * x) / 4.0).exp()).collect()
    }

    #[test]
    fn options_validation() {
        assert!(SolverOptions::default().validate().is_ok());
        let bad = SolverOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { field: "tol", .. })));
        let bad = SolverOptions {
            max_iters: 0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config { field: "max_iters", .. })));
    }

    #[test]
    fn zero_state_is_a_fixed_point() {
        let g = SpectralGrid::new(32, -10.0, 10.0).unwrap();
        let prm = EquationParams {
            beta: 1.0,
            ..linear_params()
        };
        let t = gauss_legendre(2).unwrap();
        let (u, rep) =
            step_momentum(&g, &prm, &t, &[0.0; 32], 0.1, SolverOptions::default()).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
        assert_eq!(rep.iters, 1);
        assert!(rep.converged);

        let s0 = qav_init(&[0.0; 32], 2).unwrap();
        let (s1, rep) = step_energy(&g, &prm, &t, &s0, 0.1, SolverOptions::default()).unwrap();
        assert!(s1.u.iter().all(|&v| v == 0.0));
        assert_eq!(rep.iters, 1);
    }

    #[test]
    fn linear_problem_converges_in_two_sweeps() {
        let g = SpectralGrid::new(32, -10.0, 10.0).unwrap();
        let t = gauss_legendre(3).unwrap();
        let u0 = bump(&g);
        let (_, rep) =
            step_momentum(&g, &linear_params(), &t, &u0, 0.2, SolverOptions::default()).unwrap();
        assert_eq!(rep.iters, 2);
        assert_eq!(rep.final_residual, 0.0);
    }

    #[test]
    fn strict_policy_reports_nonconvergence() {
        let g = SpectralGrid::new(32, -10.0, 10.0).unwrap();
        let prm = EquationParams {
            beta: 1.0,
            ..linear_params()
        };
        let t = gauss_legendre(2).unwrap();
        let opts = SolverOptions {
            max_iters: 2,
            on_nonconvergence: NonConvergencePolicy::Error,
            ..Default::default()
        };
        let err = step_momentum(&g, &prm, &t, &bump(&g), 0.1, opts).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iters: 2, .. }));

        let lenient = SolverOptions {
            max_iters: 2,
            ..Default::default()
        };
        let (_, rep) = step_momentum(&g, &prm, &t, &bump(&g), 0.1, lenient).unwrap();
        assert!(!rep.converged && rep.iters == 2);
    }

    #[test]
    fn divergence_is_detected() {
        let g = SpectralGrid::new(16, -10.0, 10.0).unwrap();
        let prm = EquationParams {
            beta: 1.0,
            delta: 0.0,
            alpha: 0.0,
            p: 5,
            ..linear_params()
        };
        let t = gauss_legendre(1).unwrap();
        let u0: Vec<f64> = g.nodes.iter().map(|x| 50.0 * (x / 3.0).cos()).collect();
        let err = step_momentum(&g, &prm, &t, &u0, 5.0, SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err:?}");
    }

    #[test]
    fn stage_relation_holds_at_convergence() {
        let g = SpectralGrid::new(64, -20.0, 20.0).unwrap();
        let prm = EquationParams {
            beta: 1.0,
            ..linear_params()
        };
        let t = gauss_legendre(2).unwrap();
        let mut session = Integrator::new(&g, &prm, &t, SolverOptions::default()).unwrap();
        let u0 = bump(&g);
        session.step_momentum(&u0, 0.1).unwrap();
        let st = session.last_stages().unwrap();
        for i in 0..2 {
            for (j, u) in u0.iter().enumerate() {
                let v = u + 0.1 * (t.a[i][0] * st.k[0][j] + t.a[i][1] * st.k[1][j]);
                assert!((v - st.u_stage[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn chain_auxiliaries_stay_consistent() {
        let g = SpectralGrid::new(64, -20.0, 20.0).unwrap();
        let prm = EquationParams {
            beta: 1.0,
            b_disp: 0.5,
            p: 5,
            ..linear_params()
        };
        let t = gauss_legendre(2).unwrap();
        let mut session = Integrator::new(&g, &prm, &t, SolverOptions::default()).unwrap();
        let mut s = qav_init(&bump(&g), 5).unwrap();
        for _ in 0..5 {
            s = session.step_energy(&s, 0.1).unwrap().0;
        }
        assert!(qav_defect(&s) < 1e-14);
        assert!((s.time - 0.5).abs() < 1e-15);
        assert!(session.last_stages().unwrap().m.is_some());
    }

    #[test]
    fn warm_start_reaches_same_solution() {
        let g = SpectralGrid::new(64, -20.0, 20.0).unwrap();
        let prm = EquationParams {
            beta: 1.0,
            ..linear_params()
        };
        let t = gauss_legendre(2).unwrap();
        let cold = SolverOptions::default();
        let warm = SolverOptions {
            warm_start: true,
            ..cold
        };
        let mut a = Integrator::new(&g, &prm, &t, cold).unwrap();
        let mut b = Integrator::new(&g, &prm, &t, warm).unwrap();
        let (mut ua, mut ub) = (bump(&g), bump(&g));
        let mut warm_iters = 0;
        let mut cold_iters = 0;
        for _ in 0..4 {
            let (na, ra) = a.step_momentum(&ua, 0.1).unwrap();
            let (nb, rb) = b.step_momentum(&ub, 0.1).unwrap();
            ua = na;
            ub = nb;
            cold_iters += ra.iters;
            warm_iters += rb.iters;
        }
        let diff = ua.iter().zip(&ub).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-13);
        assert!(warm_iters < cold_iters);
    }

    #[test]
    fn step_count_rules() {
        assert_eq!(step_count(0.0, 1.0, 0.1).unwrap(), 10);
        assert_eq!(step_count(1.0, 0.0, -0.1).unwrap(), 10);
        assert_eq!(step_count(0.0, 0.0, 0.1).unwrap(), 0);
        assert!(step_count(0.0, 1.0, 0.3).is_err());
        assert!(step_count(0.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn evolve_with_no_span_returns_initial() {
        let g = SpectralGrid::new(16, -5.0, 5.0).unwrap();
        let t = gauss_legendre(2).unwrap();
        let init = SolutionState::Plain {
            u: bump(&g),
            time: 0.0,
        };
        let mut calls = 0;
        let out = evolve(
            &g,
            &linear_params(),
            &t,
            init.clone(),
            0.1,
            0.0,
            1,
            SolverOptions::default(),
            |_| {
                calls += 1;
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(out.state, init);
        assert!(out.reports.is_empty());
        assert_eq!(calls, 0);
    }

    #[test]
    fn evolve_observer_cadence_and_abort() {
        let g = SpectralGrid::new(16, -5.0, 5.0).unwrap();
        let t = gauss_legendre(2).unwrap();
        let init = SolutionState::Plain {
            u: bump(&g),
            time: 0.0,
        };
        let mut seen = Vec::new();
        let out = evolve(
            &g,
            &linear_params(),
            &t,
            init.clone(),
            0.1,
            1.0,
            4,
            SolverOptions::default(),
            |obs| {
                seen.push((obs.step, obs.report.is_some()));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(seen, vec![(0, false), (4, true), (8, true), (10, true)]);
        assert_eq!(out.reports.len(), 10);
        assert!((out.state.time() - 1.0).abs() < 1e-15);

        let err = evolve(
            &g,
            &linear_params(),
            &t,
            init,
            0.1,
            1.0,
            1,
            SolverOptions::default(),
            |obs| {
                if obs.step == 3 {
                    Err("stop".into())
                } else {
                    Ok(())
                }
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Observer(ref m) if m == "stop"));
    }
}
