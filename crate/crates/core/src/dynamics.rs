//! Semi-discrete right-hand sides.
//!
//! Two formulations of the same equation
//! `u_t + κu_x − δu_xxt + b u_xxx + αu_xxxxt + β(u^p)_x = 0`:
//!
//! * momentum form `𝒜_h U' = ℱ_h(U)U` with the skew-adjoint splitting of the
//!   nonlinear flux, valid for any integer `p ≥ 2`;
//! * quadratized (auxiliary-variable) form `U' = 𝒥_h g(U, Q)` for
//!   `p ∈ {2, 3, 5}`, where the auxiliaries make the Hamiltonian quadratic.
//!
//! Powers and products are taken pointwise at the collocation nodes and
//! derivatives in Fourier space. There is no dealiasing: the discrete
//! conservation identities rely on the plain collocation product.

use crate::error::{check_len, Error, Result};
use crate::spectral::{apply_diff, apply_helmholtz_inverse, FourierWorkspace, SpectralGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationParams {
    pub kappa: f64,
    pub delta: f64,
    pub b_disp: f64,
    pub alpha: f64,
    pub beta: f64,
    pub p: u32,
}

impl EquationParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.kappa, self.delta, self.b_disp, self.alpha, self.beta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config {
                field: "params",
                reason: "coefficients must be finite".into(),
            });
        }
        if self.delta < 0.0 {
            return Err(Error::Config {
                field: "delta",
                reason: format!("must be non-negative, got {}", self.delta),
            });
        }
        if self.alpha < 0.0 {
            return Err(Error::Config {
                field: "alpha",
                reason: format!("must be non-negative, got {}", self.alpha),
            });
        }
        if self.p < 2 {
            return Err(Error::Config {
                field: "p",
                reason: format!("nonlinearity exponent must be >= 2, got {}", self.p),
            });
        }
        Ok(())
    }

    /// Coefficient `pβ/(p+1)` of the skew-symmetrized flux.
    pub fn flux_coefficient(&self) -> f64 {
        let p = self.p as f64;
        p * self.beta / (p + 1.0)
    }
}

/// Auxiliary fields of the quadratized formulation.
#[derive(Debug, Clone, PartialEq)]
pub enum Auxiliary {
    /// `q = u²`, used for `p = 2` and `p = 3`.
    Square { q: Vec<f64> },
    /// `q1 = u²`, `q2 = u·q1`, used for `p = 5`.
    Chain { q1: Vec<f64>, q2: Vec<f64> },
}

impl Auxiliary {
    fn fits_exponent(&self, p: u32) -> bool {
        matches!(
            (self, p),
            (Auxiliary::Square { .. }, 2 | 3) | (Auxiliary::Chain { .. }, 5)
        )
    }

    fn lens(&self) -> Vec<usize> {
        match self {
            Auxiliary::Square { q } => vec![q.len()],
            Auxiliary::Chain { q1, q2 } => vec![q1.len(), q2.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QavState {
    pub u: Vec<f64>,
    pub aux: Auxiliary,
    pub time: f64,
}

impl QavState {
    /// Checks that the auxiliaries match `p` and the solution length.
    pub fn check(&self, p: u32) -> Result<()> {
        if !matches!(p, 2 | 3 | 5) {
            return Err(Error::UnsupportedExponent(p));
        }
        if !self.aux.fits_exponent(p) {
            return Err(Error::State(format!(
                "auxiliary fields {} do not match exponent p = {p}",
                match self.aux {
                    Auxiliary::Square { .. } => "(q)",
                    Auxiliary::Chain { .. } => "(q1, q2)",
                }
            )));
        }
        for len in self.aux.lens() {
            check_len(self.u.len(), len)?;
        }
        Ok(())
    }
}

/// Builds the consistent initial quadratized state.
pub fn qav_init(u0: &[f64], p: u32) -> Result<QavState> {
    let square: Vec<f64> = u0.iter().map(|x| x * x).collect();
    let aux = match p {
        2 | 3 => Auxiliary::Square { q: square },
        5 => {
            let q2 = u0.iter().zip(&square).map(|(u, q)| u * q).collect();
            Auxiliary::Chain { q1: square, q2 }
        }
        _ => return Err(Error::UnsupportedExponent(p)),
    };
    Ok(QavState {
        u: u0.to_vec(),
        aux,
        time: 0.0,
    })
}

/// `max(‖Q − U²‖_∞, ‖Q2 − U·Q1‖_∞)`.
pub fn qav_defect(state: &QavState) -> f64 {
    let u = &state.u;
    match &state.aux {
        Auxiliary::Square { q } => u
            .iter()
            .zip(q)
            .fold(0.0_f64, |m, (u, q)| m.max((q - u * u).abs())),
        Auxiliary::Chain { q1, q2 } => u
            .iter()
            .zip(q1)
            .zip(q2)
            .fold(0.0_f64, |m, ((u, q1), q2)| {
                m.max((q1 - u * u).abs()).max((q2 - u * q1).abs())
            }),
    }
}

/// Pointwise pieces of the momentum-form flux: returns
/// `(c·U^{p−1}·D₁U, c·U^p)` with `c = pβ/(p+1)`; the full nonlinear flux is
/// the first plus `D₁` of the second.
pub(crate) fn mp_nonlinear_parts(
    params: &EquationParams,
    u: &[f64],
    du: &[f64],
    product: &mut [f64],
    power: &mut [f64],
) {
    let c = params.flux_coefficient();
    let p = params.p as i32;
    for j in 0..u.len() {
        let up1 = u[j].powi(p - 1);
        product[j] = c * up1 * du[j];
        power[j] = c * up1 * u[j];
    }
}

/// `ℱ_h(U)U = −[κD₁U + bD₃U + (pβ/(p+1))(U^{p−1}·D₁U + D₁(U^p))]`.
pub fn momentum_flux(
    grid: &SpectralGrid,
    ws: &mut FourierWorkspace,
    params: &EquationParams,
    u: &[f64],
) -> Result<Vec<f64>> {
    check_len(grid.n, u.len())?;
    let d1u = apply_diff(grid, ws, u, 1)?;
    let d3u = apply_diff(grid, ws, u, 3)?;
    let mut product = vec![0.0; grid.n];
    let mut power = vec![0.0; grid.n];
    mp_nonlinear_parts(params, u, &d1u, &mut product, &mut power);
    let d1_power = apply_diff(grid, ws, &power, 1)?;
    Ok((0..grid.n)
        .map(|j| -(params.kappa * d1u[j] + params.b_disp * d3u[j] + product[j] + d1_power[j]))
        .collect())
}

/// Stage velocity of the momentum form, `𝒜_h⁻¹ ℱ_h(U)U`.
pub fn stage_velocity_mp(
    grid: &SpectralGrid,
    ws: &mut FourierWorkspace,
    params: &EquationParams,
    u_stage: &[f64],
) -> Result<Vec<f64>> {
    let flux = momentum_flux(grid, ws, params, u_stage)?;
    apply_helmholtz_inverse(grid, ws, params, &flux)
}

/// Nonlinear part of the quadratized gradient:
/// `p=2: (β/3)q + (2β/3)u²`, `p=3: βuq`, `p=5: (β/3)q2(q1 + 2u²)`.
pub fn ep_nonlinear(params: &EquationParams, u: &[f64], aux: &Auxiliary) -> Result<Vec<f64>> {
    let beta = params.beta;
    match (params.p, aux) {
        (2, Auxiliary::Square { q }) => Ok(u
            .iter()
            .zip(q)
            .map(|(u, q)| beta / 3.0 * q + 2.0 * beta / 3.0 * u * u)
            .collect()),
        (3, Auxiliary::Square { q }) => Ok(u.iter().zip(q).map(|(u, q)| beta * u * q).collect()),
        (5, Auxiliary::Chain { q1, q2 }) => Ok(u
            .iter()
            .zip(q1)
            .zip(q2)
            .map(|((u, q1), q2)| beta / 3.0 * q2 * (q1 + 2.0 * u * u))
            .collect()),
        (2 | 3 | 5, _) => Err(Error::State(format!(
            "auxiliary fields do not match exponent p = {}",
            params.p
        ))),
        (p, _) => Err(Error::UnsupportedExponent(p)),
    }
}

/// Variational gradient `g` of the quadratized Hamiltonian, so that
/// `dU/dt = 𝒥_h g`.
pub fn ep_gradient(
    grid: &SpectralGrid,
    ws: &mut FourierWorkspace,
    params: &EquationParams,
    state: &QavState,
) -> Result<Vec<f64>> {
    state.check(params.p)?;
    check_len(grid.n, state.u.len())?;
    let nonlinear = ep_nonlinear(params, &state.u, &state.aux)?;
    let d2u = apply_diff(grid, ws, &state.u, 2)?;
    Ok((0..grid.n)
        .map(|j| params.kappa * state.u[j] + params.b_disp * d2u[j] + nonlinear[j])
        .collect())
}

/// `𝒥_h g = −𝒜_h⁻¹ D₁ g`.
pub fn apply_j(
    grid: &SpectralGrid,
    ws: &mut FourierWorkspace,
    params: &EquationParams,
    g: &[f64],
) -> Result<Vec<f64>> {
    check_len(grid.n, g.len())?;
    let symbol = grid.hamiltonian_operator_symbol(params);
    ws.apply_symbol(&symbol, g)
}

/// Auxiliary stage rates: `L = 2U·K`, and for `p = 5` also
/// `M = K·Q1 + 2U²·K`.
pub fn qav_stage_rates(
    params: &EquationParams,
    u_stage: &[f64],
    k_stage: &[f64],
    q1_stage: Option<&[f64]>,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    check_len(u_stage.len(), k_stage.len())?;
    let l = u_stage
        .iter()
        .zip(k_stage)
        .map(|(u, k)| 2.0 * u * k)
        .collect();
    if params.p != 5 {
        return Ok((l, None));
    }
    let q1 = q1_stage.ok_or_else(|| Error::State("p = 5 requires the q1 stage values".into()))?;
    check_len(u_stage.len(), q1.len())?;
    let m = u_stage
        .iter()
        .zip(k_stage)
        .zip(q1)
        .map(|((u, k), q1)| k * q1 + 2.0 * u * u * k)
        .collect();
    Ok((l, Some(m)))
}
