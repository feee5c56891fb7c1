//! Equation presets, closed-form solitary waves and initial profiles.
//!
//! Travelling waves are evaluated as the `t = 0` profile at `x − ct`. The
//! hyperbolic secant uses `2e^{−|z|}/(1 + e^{−2|z|})`, which cannot overflow
//! and underflows cleanly to zero in the far tail.
//!
//! The solitary waves are not periodic. On the preset domains their tails are
//! far below `1e-12` at the boundary, so the wrap-around error stays beneath
//! the time-discretization error.

use crate::dynamics::EquationParams;
use crate::error::{Error, Result};

pub fn sech(z: f64) -> f64 {
    let e = (-z.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// Amplitude, inverse width and speed of the Rosenau-RLW solitary wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RlwSoliton {
    pub p: u32,
    pub amplitude: f64,
    pub width: f64,
    pub speed: f64,
    pub x0: f64,
}

impl RlwSoliton {
    pub fn new(p: u32, x0: f64) -> Result<Self> {
        if !matches!(p, 2 | 3 | 5) {
            return Err(Error::UnsupportedExponent(p));
        }
        let pf = p as f64;
        let ratio = (pf + 3.0) * (3.0 * pf + 1.0) * (pf + 1.0)
            / (2.0 * (pf * pf + 3.0) * (pf * pf + 4.0 * pf + 7.0));
        let amplitude = (ratio.ln() / (pf - 1.0)).exp();
        let width = (pf - 1.0) / (4.0 * pf * pf + 8.0 * pf + 20.0).sqrt();
        let p2 = pf * pf;
        let p3 = p2 * pf;
        let p4 = p3 * pf;
        let speed = (p4 + 4.0 * p3 + 14.0 * p2 + 20.0 * pf + 25.0)
            / (p4 + 4.0 * p3 + 10.0 * p2 + 12.0 * pf + 21.0);
        Ok(Self {
            p,
            amplitude,
            width,
            speed,
            x0,
        })
    }

    pub fn profile(&self, xi: f64) -> f64 {
        let exponent = 4.0 / (self.p as f64 - 1.0);
        self.amplitude * sech(self.width * xi).powf(exponent)
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.profile(x - self.speed * t - self.x0)
    }
}

/// Pointwise Rosenau-RLW solitary wave.
pub fn rlw_soliton(p: u32, x: f64, t: f64, x0: f64) -> Result<f64> {
    Ok(RlwSoliton::new(p, x0)?.eval(x, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdvCase {
    /// `β = 1/2`, `p = 2`
    P2,
    /// `β = 1`, `p = 3`
    P3,
    /// `β = 1`, `p = 5`
    P5,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdvSoliton {
    pub case: KdvCase,
    pub amplitude: f64,
    pub width: f64,
    pub speed: f64,
    /// Power of the secant, `4/(p−1)`.
    pub sech_power: i32,
}

impl KdvSoliton {
    pub fn new(case: KdvCase) -> Self {
        match case {
            KdvCase::P2 => {
                let r = 313f64.sqrt();
                Self {
                    case,
                    amplitude: -35.0 / 24.0 + 35.0 / 312.0 * r,
                    width: (-26.0 + 2.0 * r).sqrt() / 24.0,
                    speed: 0.5 + r / 26.0,
                    sech_power: 4,
                }
            }
            KdvCase::P3 => {
                let r = 41f64.sqrt();
                Self {
                    case,
                    amplitude: (-15.0 + 3.0 * r).sqrt() / 4.0,
                    width: ((-5.0 + r) / 2.0).sqrt() / 4.0,
                    speed: (5.0 + r) / 10.0,
                    sech_power: 2,
                }
            }
            KdvCase::P5 => {
                let r = 34f64.sqrt();
                Self {
                    case,
                    amplitude: (4.0 / 15.0 * (-5.0 + r)).powf(0.25),
                    width: (-5.0 + r).sqrt() / 3.0,
                    speed: (5.0 + r) / 10.0,
                    sech_power: 1,
                }
            }
        }
    }

    pub fn profile(&self, xi: f64) -> f64 {
        self.amplitude * sech(self.width * xi).powi(self.sech_power)
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        self.profile(x - self.speed * t)
    }
}

/// Pointwise Rosenau-KdV solitary wave.
pub fn kdv_soliton(case: KdvCase, x: f64, t: f64) -> f64 {
    KdvSoliton::new(case).eval(x, t)
}

/// `exp(−0.05(x − 40)²)`.
pub fn gaussian_profile(x: f64) -> f64 {
    (-0.05 * (x - 40.0) * (x - 40.0)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactSolution {
    Rlw(RlwSoliton),
    Kdv(KdvSoliton),
}

impl ExactSolution {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            ExactSolution::Rlw(s) => s.eval(x, t),
            ExactSolution::Kdv(s) => s.eval(x, t),
        }
    }

    pub fn speed(&self) -> f64 {
        match self {
            ExactSolution::Rlw(s) => s.speed,
            ExactSolution::Kdv(s) => s.speed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum InitialProfile {
    Exact,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemPreset {
    pub name: String,
    pub params: EquationParams,
    pub domain: (f64, f64),
    pub exact: Option<ExactSolution>,
    pub x0: f64,
    initial: InitialProfile,
}

/// Stable preset names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 7] = [
    "rlw-p2",
    "rlw-p3",
    "rlw-p5",
    "kdv-case1",
    "kdv-case2",
    "kdv-case3",
    "gaussian-rlw",
];

fn rlw_params(p: u32) -> EquationParams {
    EquationParams {
        kappa: 1.0,
        delta: 1.0,
        b_disp: 0.0,
        alpha: 1.0,
        beta: 1.0,
        p,
    }
}

fn kdv_params(beta: f64, p: u32) -> EquationParams {
    EquationParams {
        kappa: 1.0,
        delta: 0.0,
        b_disp: 1.0,
        alpha: 1.0,
        beta,
        p,
    }
}

pub fn preset(name: &str) -> Result<ProblemPreset> {
    let rlw = |p: u32| -> Result<ProblemPreset> {
        Ok(ProblemPreset {
            name: name.to_string(),
            params: rlw_params(p),
            domain: (-200.0, 200.0),
            exact: Some(ExactSolution::Rlw(RlwSoliton::new(p, 0.0)?)),
            x0: 0.0,
            initial: InitialProfile::Exact,
        })
    };
    let kdv = |case: KdvCase, beta: f64, p: u32| ProblemPreset {
        name: name.to_string(),
        params: kdv_params(beta, p),
        domain: (-100.0, 100.0),
        exact: Some(ExactSolution::Kdv(KdvSoliton::new(case))),
        x0: 0.0,
        initial: InitialProfile::Exact,
    };
    match name {
        "rlw-p2" => rlw(2),
        "rlw-p3" => rlw(3),
        "rlw-p5" => rlw(5),
        "kdv-case1" => Ok(kdv(KdvCase::P2, 0.5, 2)),
        "kdv-case2" => Ok(kdv(KdvCase::P3, 1.0, 3)),
        "kdv-case3" => Ok(kdv(KdvCase::P5, 1.0, 5)),
        "gaussian-rlw" => Ok(ProblemPreset {
            name: name.to_string(),
            params: rlw_params(2),
            domain: (-50.0, 250.0),
            exact: None,
            x0: 0.0,
            initial: InitialProfile::Gaussian,
        }),
        _ => Err(Error::UnknownPreset {
            name: name.to_string(),
            available: PRESET_NAMES.join(", "),
        }),
    }
}

impl ProblemPreset {
    pub fn initial_value(&self, x: f64) -> f64 {
        match (self.initial, &self.exact) {
            (InitialProfile::Exact, Some(e)) => e.eval(x, 0.0),
            _ => gaussian_profile(x),
        }
    }

    pub fn sample_initial(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|&x| self.initial_value(x)).collect()
    }

    /// Replaces the nonlinearity exponent. Only presets whose exact solution
    /// (if any) is available for the new exponent accept this.
    pub fn with_exponent(mut self, p: u32) -> Result<Self> {
        if p == self.params.p {
            return Ok(self);
        }
        match self.exact {
            None => {
                self.params.p = p;
                self.params.validate()?;
                Ok(self)
            }
            Some(ExactSolution::Rlw(s)) => {
                self.exact = Some(ExactSolution::Rlw(RlwSoliton::new(p, s.x0)?));
                self.params.p = p;
                Ok(self)
            }
            Some(ExactSolution::Kdv(_)) => Err(Error::Config {
                field: "p",
                reason: format!(
                    "preset `{}` ties its exact solution to p = {}",
                    self.name, self.params.p
                ),
            }),
        }
    }
}
