//! Discrete invariants, error norms and observed convergence orders.

use crate::dynamics::{qav_defect, Auxiliary, EquationParams, QavState};
use crate::error::{check_len, Error, Result};
use crate::integrator::SolutionState;
use crate::spectral::{
    apply_diff, apply_helmholtz, discrete_inner, discrete_norm2, discrete_norm_inf,
    FourierWorkspace, SpectralGrid,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantRecord {
    pub time: f64,
    /// `M_h = ⟨U, 1⟩_h`
    pub mass: f64,
    /// `I_h = ½⟨U, 𝒜_h U⟩_h`
    pub momentum: f64,
    /// `H_h = (κ/2)‖U‖² + (b/2)⟨D₂U, U⟩ + (β/(p+1))⟨U, U^p⟩`
    pub hamiltonian: f64,
    /// Quadratized energy, present for auxiliary-variable states.
    pub quad_energy: Option<f64>,
    pub qav_defect: Option<f64>,
}

impl InvariantRecord {
    pub fn is_finite(&self) -> bool {
        [self.time, self.mass, self.momentum, self.hamiltonian]
            .iter()
            .chain(self.quad_energy.iter())
            .chain(self.qav_defect.iter())
            .all(|v| v.is_finite())
    }
}

/// Evaluates every discrete invariant of `state`. Both schemes go through
/// this single code path.
pub fn invariants(
    grid: &SpectralGrid,
    ws: &mut FourierWorkspace,
    params: &EquationParams,
    state: &SolutionState,
) -> Result<InvariantRecord> {
    match state {
        SolutionState::Plain { u, time } => invariants_of(grid, ws, params, u, None, *time),
        SolutionState::Quadratized(q) => invariants_of_qav(grid, ws, params, q),
    }
}

pub fn invariants_of_qav(
    grid: &SpectralGrid,
    ws: &mut FourierWorkspace,
    params: &EquationParams,
    state: &QavState,
) -> Result<InvariantRecord> {
    state.check(params.p)?;
    invariants_of(grid, ws, params, &state.u, Some(state), state.time)
}

fn invariants_of(
    grid: &SpectralGrid,
    ws: &mut FourierWorkspace,
    params: &EquationParams,
    u: &[f64],
    qav: Option<&QavState>,
    time: f64,
) -> Result<InvariantRecord> {
    check_len(grid.n, u.len())?;
    let h = grid.h;
    let ones = vec![1.0; grid.n];
    let mass = discrete_inner(u, &ones, h)?;
    let au = apply_helmholtz(grid, ws, params, u)?;
    let momentum = 0.5 * discrete_inner(u, &au, h)?;
    let d2u = apply_diff(grid, ws, u, 2)?;
    let quadratic =
        0.5 * params.kappa * discrete_inner(u, u, h)? + 0.5 * params.b_disp * discrete_inner(&d2u, u, h)?;
    let upow: Vec<f64> = u.iter().map(|x| x.powi(params.p as i32)).collect();
    let hamiltonian =
        quadratic + params.beta / (params.p as f64 + 1.0) * discrete_inner(u, &upow, h)?;

    let (quad_energy, defect) = match qav {
        None => (None, None),
        Some(state) => {
            let beta = params.beta;
            let coupled = match (&state.aux, params.p) {
                (Auxiliary::Square { q }, 2) => beta / 3.0 * discrete_inner(u, q, h)?,
                (Auxiliary::Square { q }, 3) => beta / 4.0 * discrete_inner(q, q, h)?,
                (Auxiliary::Chain { q2, .. }, 5) => beta / 6.0 * discrete_inner(q2, q2, h)?,
                (_, p) => return Err(Error::UnsupportedExponent(p)),
            };
            (Some(quadratic + coupled), Some(qav_defect(state)))
        }
    };
    Ok(InvariantRecord {
        time,
        mass,
        momentum,
        hamiltonian,
        quad_energy,
        qav_defect: defect,
    })
}

/// `(e₂, e_∞)` of `numeric` against `exact(x, t)` sampled at the nodes;
/// `e₂` is the `h`-weighted discrete norm.
pub fn error_norms<F>(grid: &SpectralGrid, numeric: &[f64], exact: F, t: f64) -> Result<(f64, f64)>
where
    F: Fn(f64, f64) -> f64,
{
    check_len(grid.n, numeric.len())?;
    let diff: Vec<f64> = grid
        .nodes
        .iter()
        .zip(numeric)
        .map(|(&x, &v)| exact(x, t) - v)
        .collect();
    Ok((discrete_norm2(&diff, grid.h), discrete_norm_inf(&diff)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub e2: f64,
    pub einf: f64,
    pub order2: Option<f64>,
    pub orderinf: Option<f64>,
    /// Set when an order could not be formed because an error was zero.
    pub order_undefined: bool,
}

impl ConvergenceRow {
    pub fn new(dt: f64, e2: f64, einf: f64) -> Self {
        Self {
            dt,
            e2,
            einf,
            order2: None,
            orderinf: None,
            order_undefined: false,
        }
    }
}

fn pairwise_order(e_prev: f64, e_curr: f64, dt_prev: f64, dt_curr: f64) -> Option<f64> {
    if e_prev > 0.0 && e_curr > 0.0 {
        Some((e_prev / e_curr).ln() / (dt_prev / dt_curr).ln())
    } else {
        None
    }
}

/// Fills pairwise slopes `log(e_prev/e_curr) / log(dt_prev/dt_curr)` from the
/// second row on.
pub fn estimate_order(rows: &[ConvergenceRow]) -> Result<Vec<ConvergenceRow>> {
    for w in rows.windows(2) {
        if w[1].dt >= w[0].dt || w[1].dt <= 0.0 {
            return Err(Error::Config {
                field: "dt",
                reason: "convergence rows need strictly decreasing positive step sizes".into(),
            });
        }
    }
    if rows.iter().any(|r| r.e2 < 0.0 || r.einf < 0.0) {
        return Err(Error::Config {
            field: "errors",
            reason: "error norms must be non-negative".into(),
        });
    }
    let mut out: Vec<ConvergenceRow> = rows
        .iter()
        .map(|r| ConvergenceRow::new(r.dt, r.e2, r.einf))
        .collect();
    for i in 1..out.len() {
        let (prev, curr) = (out[i - 1], out[i]);
        let o2 = pairwise_order(prev.e2, curr.e2, prev.dt, curr.dt);
        let oi = pairwise_order(prev.einf, curr.einf, prev.dt, curr.dt);
        out[i].order_undefined = o2.is_none() || oi.is_none();
        out[i].order2 = o2;
        out[i].orderinf = oi;
    }
    Ok(out)
}

/// Mean of the available `(order2, orderinf)` slopes.
pub fn mean_orders(rows: &[ConvergenceRow]) -> (Option<f64>, Option<f64>) {
    let mean = |vals: Vec<f64>| {
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };
    (
        mean(rows.iter().filter_map(|r| r.order2).collect()),
        mean(rows.iter().filter_map(|r| r.orderinf).collect()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::qav_init;

    fn params(p: u32) -> EquationParams {
        EquationParams {
            kappa: 1.0,
            delta: 0.0,
            b_disp: 1.0,
            alpha: 0.0,
            beta: 0.5,
            p,
        }
    }

    #[test]
    fn zero_state_has_zero_invariants() {
        let g = SpectralGrid::new(16, -1.0, 1.0).unwrap();
        let mut ws = FourierWorkspace::for_grid(&g);
        let s = SolutionState::Quadratized(qav_init(&[0.0; 16], 2).unwrap());
        let r = invariants(&g, &mut ws, &params(2), &s).unwrap();
        assert_eq!(
            (r.mass, r.momentum, r.hamiltonian, r.quad_energy, r.qav_defect),
            (0.0, 0.0, 0.0, Some(0.0), Some(0.0))
        );
    }

    #[test]
    fn constant_state_on_unit_interval() {
        let g = SpectralGrid::new(20, 0.0, 1.0).unwrap();
        let mut ws = FourierWorkspace::for_grid(&g);
        let c = 0.7;
        let s = SolutionState::Plain {
            u: vec![c; 20],
            time: 2.0,
        };
        let r = invariants(&g, &mut ws, &params(2), &s).unwrap();
        assert!((r.mass - c).abs() < 1e-14);
        assert!((r.momentum - c * c / 2.0).abs() < 1e-14);
        assert_eq!(r.time, 2.0);
        assert!(r.quad_energy.is_none() && r.qav_defect.is_none());
    }

    #[test]
    fn quadratized_energy_matches_hamiltonian_on_consistent_states() {
        let g = SpectralGrid::new(64, -10.0, 10.0).unwrap();
        let mut ws = FourierWorkspace::for_grid(&g);
        let u: Vec<f64> = g.nodes.iter().map(|x| 0.8 / (x / 2.0).cosh()).collect();
        for p in [2, 3, 5] {
            let s = SolutionState::Quadratized(qav_init(&u, p).unwrap());
            let r = invariants(&g, &mut ws, &params(p), &s).unwrap();
            let e = r.quad_energy.unwrap();
            assert!((e - r.hamiltonian).abs() < 1e-12 * r.hamiltonian.abs(), "p = {p}");
            assert!(r.is_finite());
        }
    }

    #[test]
    fn nyquist_difference_between_gradient_forms() {
        // ⟨D₂U, U⟩ sees the Nyquist mode while −‖D₁U‖² does not
        let n = 16;
        let g = SpectralGrid::new(n, 0.0, 2.0).unwrap();
        let mut ws = FourierWorkspace::for_grid(&g);
        let u: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let d2u = apply_diff(&g, &mut ws, &u, 2).unwrap();
        let d1u = apply_diff(&g, &mut ws, &u, 1).unwrap();
        let via_d2 = discrete_inner(&d2u, &u, g.h).unwrap();
        let via_d1 = -discrete_inner(&d1u, &d1u, g.h).unwrap();
        let nyq = g.mu * n as f64 / 2.0;
        assert!(via_d1.abs() < 1e-20);
        assert!((via_d2 + nyq * nyq * 2.0).abs() < 1e-10 * nyq * nyq);
    }

    #[test]
    fn error_norm_cases() {
        let g = SpectralGrid::new(10, 0.0, 5.0).unwrap();
        let exact = |x: f64, t: f64| (x - t).sin();
        let samples: Vec<f64> = g.nodes.iter().map(|&x| exact(x, 0.3)).collect();
        assert_eq!(error_norms(&g, &samples, exact, 0.3).unwrap(), (0.0, 0.0));
        let mut bumped = samples.clone();
        bumped[3] += 0.25;
        let (e2, einf) = error_norms(&g, &bumped, exact, 0.3).unwrap();
        assert!((einf - 0.25).abs() < 1e-15);
        assert!((e2 - 0.25 * g.h.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn order_estimation() {
        let rows = vec![
            ConvergenceRow::new(0.1, 1e-4, 2e-4),
            ConvergenceRow::new(0.05, 6.25e-6, 1.25e-5),
        ];
        let out = estimate_order(&rows).unwrap();
        assert!(out[0].order2.is_none());
        assert!((out[1].order2.unwrap() - 4.0).abs() < 1e-12);
        assert!((out[1].orderinf.unwrap() - 4.0).abs() < 1e-12);

        let table = vec![
            ConvergenceRow::new(0.1, 1.518e-9, 5.984e-10),
            ConvergenceRow::new(0.05, 9.490e-11, 3.740e-11),
        ];
        let out = estimate_order(&table).unwrap();
        assert!((out[1].order2.unwrap() - 4.000).abs() < 5e-4);

        let single = estimate_order(&rows[..1]).unwrap();
        assert!(single[0].order2.is_none() && single[0].orderinf.is_none());

        let zero = vec![
            ConvergenceRow::new(0.1, 1e-4, 1e-4),
            ConvergenceRow::new(0.05, 0.0, 1e-6),
        ];
        let out = estimate_order(&zero).unwrap();
        assert!(out[1].order2.is_none() && out[1].order_undefined);
        assert!(out[1].orderinf.is_some());

        let unsorted = vec![rows[1], rows[0]];
        assert!(estimate_order(&unsorted).is_err());
        assert_eq!(mean_orders(&estimate_order(&rows).unwrap()).0.map(|o| o.round()), Some(4.0));
    }
}
