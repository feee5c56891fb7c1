//! Gauss–Legendre collocation tableaux.
//!
//! Abscissae are the zeros of the shifted Legendre polynomial
//! `dˢ/dxˢ [xˢ(x−1)ˢ]` on `(0, 1)`, found by Newton's method on the Legendre
//! three-term recurrence. The stage matrix entries
//! `a_ij = ∫₀^{c_i} ℓ_j(t) dt` are integrated with the same Gauss rule mapped
//! onto `[0, c_i]`; the rule is exact for the degree-`s−1` Lagrange basis, so
//! the entries satisfy the collocation conditions
//! `Σ_j a_ij c_j^{k−1} = c_i^k / k` (k = 1..s) without forming a Vandermonde
//! matrix.

use crate::error::{Error, Result};

/// Largest supported stage count. Beyond ten stages the double-precision
/// collocation conditions lose several digits.
pub const MAX_STAGES: usize = 10;

const NEWTON_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub s: usize,
    pub c: Vec<f64>,
    /// Row-major stage coefficients, `a[i][j] = a_ij`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub order: usize,
}

impl ButcherTableau {
    /// Wraps user-supplied coefficients after a shape check.
    pub fn new(c: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>, order: usize) -> Result<Self> {
        let s = b.len();
        if s == 0 || c.len() != s || a.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::Config {
                field: "tableau",
                reason: format!("inconsistent shapes for {s}-stage tableau"),
            });
        }
        Ok(Self { s, c, a, b, order })
    }

    /// Implicit Gauss method with `s` stages and order `2s`.
    pub fn gauss_legendre(s: usize) -> Result<Self> {
        gauss_legendre(s)
    }

    pub fn symplectic_defect(&self) -> f64 {
        symplectic_defect(self)
    }
}

/// Legendre `P_s(x)` and its derivative.
fn legendre(s: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    if s == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=s {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = next;
    }
    let dp = s as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, dp)
}

/// Gauss nodes and weights on `[-1, 1]`, nodes ascending.
fn gauss_rule(s: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let sf = s as f64;
    let mut nodes = vec![0.0; s];
    let mut weights = vec![0.0; s];
    for i in 0..s.div_ceil(2) {
        // Tricomi's initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (sf + 0.5)).cos();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITERS {
            let (p, dp) = legendre(s, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numeric(format!(
                "Newton iteration for Legendre root {i} of degree {s} did not converge"
            )));
        }
        let (_, dp) = legendre(s, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[s - 1 - i] = x;
        nodes[i] = -x;
        weights[s - 1 - i] = w;
        weights[i] = w;
    }
    if s % 2 == 1 {
        nodes[s / 2] = 0.0;
    }
    Ok((nodes, weights))
}

fn lagrange_basis(c: &[f64], j: usize, t: f64) -> f64 {
    c.iter()
        .enumerate()
        .filter(|&(m, _)| m != j)
        .fold(1.0, |acc, (_, &cm)| acc * (t - cm) / (c[j] - cm))
}

pub fn gauss_legendre(s: usize) -> Result<ButcherTableau> {
    if !(1..=MAX_STAGES).contains(&s) {
        return Err(Error::UnsupportedStages(s));
    }
    let (x, w) = gauss_rule(s)?;
    let c: Vec<f64> = x.iter().map(|xi| 0.5 * (1.0 + xi)).collect();
    let b: Vec<f64> = w.iter().map(|wi| 0.5 * wi).collect();
    let a = c
        .iter()
        .map(|&ci| {
            (0..s)
                .map(|j| {
                    c.iter()
                        .zip(&b)
                        .map(|(&cm, &bm)| ci * bm * lagrange_basis(&c, j, ci * cm))
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok(ButcherTableau {
        s,
        c,
        a,
        b,
        order: 2 * s,
    })
}

/// `max_ij |b_i a_ij + b_j a_ji − b_i b_j|`.
pub fn symplectic_defect(t: &ButcherTableau) -> f64 {
    let mut defect = 0.0_f64;
    for i in 0..t.s {
        for j in 0..t.s {
            let v = t.b[i] * t.a[i][j] + t.b[j] * t.a[j][i] - t.b[i] * t.b[j];
            defect = defect.max(v.abs());
        }
    }
    defect
}
