//! Arbitrarily high-order momentum- and energy-preserving schemes for the
//! generalized Rosenau-type equation
//!
//! ```text
//! u_t + κu_x − δu_xxt + b u_xxx + αu_xxxxt + β(u^p)_x = 0
//! ```
//!
//! on a periodic interval. Space is discretized with the Fourier
//! pseudo-spectral method and time with Gauss–Legendre collocation of any
//! stage count:
//!
//! * the momentum scheme integrates `𝒜_h U' = ℱ_h(U)U` and conserves the
//!   discrete momentum `½⟨U, 𝒜_h U⟩_h` (and the mass when `p = 2`);
//! * the energy scheme integrates the auxiliary-variable reformulation
//!   (`q = u²`, plus `q2 = u·q1` for `p = 5`) and conserves the quadratized
//!   energy, the Hamiltonian and the mass.
//!
//! Implicit stages are solved with a fixed-point iteration whose linear part
//! is diagonal in Fourier space.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod problems;
pub mod spectral;
pub mod tableau;

pub use diagnostics::{error_norms, estimate_order, invariants, ConvergenceRow, InvariantRecord};
pub use dynamics::{qav_defect, qav_init, Auxiliary, EquationParams, QavState};
pub use error::{Error, Result};
pub use integrator::{
    evolve, step_energy, step_momentum, EvolveOutcome, Integrator, NonConvergencePolicy,
    Observation, Scheme, SolutionState, SolverOptions, StepReport,
};
pub use problems::{preset, ExactSolution, KdvCase, ProblemPreset};
pub use spectral::{FourierWorkspace, SpectralGrid};
pub use tableau::{gauss_legendre, symplectic_defect, ButcherTableau};
