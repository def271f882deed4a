//! Discrete-time Schrödinger bridges between Gaussian marginals under a
//! pathwise LQR cost.
//!
//! The reference measure on a path `x_0..x_K` is
//! `exp(-Σ_k ℓ_k(x_k, x_{k+1}) / ε)` with
//! `ℓ_k(x, y) = ½(x−x*_k)ᵀQ_k(x−x*_k) + ½(y−x)ᵀR_k(y−x)`.
//! Gaussian boundary potentials are propagated exactly through backward and
//! forward Riccati recursions; alternating the boundary updates yields the
//! bridge, whose transition kernels and marginals are then available in
//! closed form.
//!
//! ```
//! use lqr_bridge::{synthesize, CostSchedule, Gaussian, Scenario};
//! use nalgebra::{DMatrix, DVector};
//!
//! let p0 = Gaussian::new(DVector::from_vec(vec![0.0, 0.0]), DMatrix::identity(2, 2) * 1e-6).unwrap();
//! let pk = Gaussian::new(DVector::from_vec(vec![1.0, 1.0]), DMatrix::identity(2, 2) * 1e-6).unwrap();
//! let s = Scenario::new(CostSchedule::constant(2, 100, 100.0, 0.0, 1.0), p0, pk);
//! let sol = synthesize(&s).unwrap();
//! assert!(sol.diagnostics().converged);
//! assert_eq!(sol.marginals.items.len(), 101);
//! ```

pub mod error;
pub mod gaussian;
pub mod grid_oracle;
pub mod par;
pub mod problem;
pub mod process;
pub mod solver;
pub mod spd;

pub use error::{BridgeError, Location, Result};
pub use gaussian::{convolve, divide, product, Gaussian, QuadraticPotential};
pub use par::Execution;
pub use problem::{
    pairwise_loss, path_loss, BoundaryMarginals, CostSchedule, Scenario, SolverSettings, Violation,
};
pub use process::{
    kernels, path_log_density, rollout, sample_paths, synthesize, BridgeSolution, KernelStep,
    MarginalPath, Path, Sampler,
};
pub use solver::{
    backward_sweep, forward_sweep, run_sweeps, run_sweeps_from, solve, update_initial_potential,
    update_terminal_potential, Direction, PotentialSequence, SolveDiagnostics, SolvedPotentials,
};
pub use spd::SpdFactor;
