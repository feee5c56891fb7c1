//! Independent oracles shared by the integration tests. Nothing here calls
//! into the FFT path; everything is dense linear algebra or plain quadrature.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rosenau::spectral::dense_diff_matrix;
use rosenau::{EquationParams, SpectralGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Smooth periodic data built from the lowest `modes` harmonics.
pub fn smooth_periodic(grid: &SpectralGrid, rng: &mut ChaCha8Rng, modes: usize, scale: f64) -> Vec<f64> {
    let coeffs: Vec<(f64, f64)> = (0..=modes)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    grid.nodes
        .iter()
        .map(|&x| {
            let theta = grid.mu * (x - grid.x_left);
            coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let w = 1.0 / (1.0 + k as f64).powi(2);
                    w * (a * (k as f64 * theta).cos() + b * (k as f64 * theta).sin())
                })
                .sum::<f64>()
                * scale
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn inner(u: &[f64], v: &[f64], h: f64) -> f64 {
    h * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
}

pub struct DenseOps {
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    pub d3: DMatrix<f64>,
    pub d4: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

impl DenseOps {
    pub fn new(grid: &SpectralGrid, params: &EquationParams) -> Self {
        let d1 = dense_diff_matrix(grid, 1).unwrap();
        let d2 = dense_diff_matrix(grid, 2).unwrap();
        let d3 = dense_diff_matrix(grid, 3).unwrap();
        let d4 = dense_diff_matrix(grid, 4).unwrap();
        let n = grid.n;
        let a = DMatrix::identity(n, n) - &d2 * params.delta + &d4 * params.alpha;
        Self { d1, d2, d3, d4, a }
    }

    /// Dense `𝒜⁻¹ ℱ(U)U`.
    pub fn stage_velocity(&self, params: &EquationParams, u: &[f64]) -> Vec<f64> {
        let n = u.len();
        let uv = DVector::from_column_slice(u);
        let p = params.p as i32;
        let c = params.p as f64 * params.beta / (params.p as f64 + 1.0);
        let d1u = &self.d1 * &uv;
        let upow = DVector::from_iterator(n, u.iter().map(|x| x.powi(p)));
        let d1pow = &self.d1 * upow;
        let mut f = -(&self.d1 * &uv * params.kappa + &self.d3 * &uv * params.b_disp);
        for j in 0..n {
            f[j] -= c * (u[j].powi(p - 1) * d1u[j] + d1pow[j]);
        }
        self.a.clone().lu().solve(&f).unwrap().iter().copied().collect()
    }

    /// One linear (`β = 0`) collocation step solved as a single coupled
    /// `sN × sN` system.
    #[allow(clippy::needless_range_loop)]
    pub fn linear_step(&self, params: &EquationParams, a: &[Vec<f64>], b: &[f64], u: &[f64], dt: f64) -> Vec<f64> {
        let n = u.len();
        let s = b.len();
        let l = -(&self.d1 * params.kappa + &self.d3 * params.b_disp);
        let uv = DVector::from_column_slice(u);
        let lu = &l * &uv;
        let mut m = DMatrix::zeros(s * n, s * n);
        let mut rhs = DVector::zeros(s * n);
        for i in 0..s {
            for j in 0..s {
                let block = if i == j { self.a.clone() } else { DMatrix::zeros(n, n) } - &l * (dt * a[i][j]);
                m.view_mut((i * n, j * n), (n, n)).copy_from(&block);
            }
            rhs.rows_mut(i * n, n).copy_from(&lu);
        }
        let k = m.lu().solve(&rhs).unwrap();
        let mut out = u.to_vec();
        for i in 0..s {
            for j in 0..n {
                out[j] += dt * b[i] * k[i * n + j];
            }
        }
        out
    }
}

/// Finite-difference weights for the `m`-th derivative at `x0` on the nodes
/// `xs` (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Residual of `u_t + κu_x − δu_xxt + b u_xxx + αu_xxxxt + β(u^p)_x` for a
/// pointwise solution, from centered stencils of half-width `w` and spacing
/// `h` in both variables.
pub fn pde_residual<F: Fn(f64, f64) -> f64>(u: F, params: &EquationParams, x: f64, t: f64, h: f64, w: usize) -> f64 {
    let offsets: Vec<f64> = (0..=2 * w).map(|i| (i as f64 - w as f64) * h).collect();
    let wt = |m: usize| fornberg_weights(0.0, &offsets, m);
    let (w1, w2, w3, w4) = (wt(1), wt(2), wt(3), wt(4));
    let dx = |f: &dyn Fn(f64) -> f64, ws: &[f64]| -> f64 {
        offsets.iter().zip(ws).map(|(o, c)| c * f(x + o)).sum()
    };
    let ut_at = |xx: f64| -> f64 { offsets.iter().zip(&w1).map(|(o, c)| c * u(xx, t + o)).sum() };
    let ux = dx(&|xx| u(xx, t), &w1);
    let uxxx = dx(&|xx| u(xx, t), &w3);
    let upx = dx(&|xx| u(xx, t).powi(params.p as i32), &w1);
    let ut = ut_at(x);
    let uxxt = dx(&ut_at, &w2);
    let uxxxxt = dx(&ut_at, &w4);
    ut + params.kappa * ux - params.delta * uxxt + params.b_disp * uxxx + params.alpha * uxxxxt + params.beta * upx
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}
