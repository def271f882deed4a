//! Forward-backward propagation of Gaussian potentials and the alternating
//! boundary updates.
//!
//! The backward pass runs the control-type Riccati recursion on precisions,
//! the forward pass runs the estimation-type recursion in covariance form
//! (which stays valid when `Q_k = 0`). Boundary potentials are refreshed by
//! dividing the marginals by the propagated potentials until the parameters
//! stop moving.

use nalgebra::DMatrix;

use crate::error::{BridgeError, Result};
use crate::gaussian::{divide, QuadraticPotential};
use crate::problem::Scenario;
use crate::spd::{symmetrize, SpdFactor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Backward,
    Forward,
}

/// Potentials indexed `k = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSequence {
    pub direction: Direction,
    pub items: Vec<QuadraticPotential>,
}

impl PotentialSequence {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn first(&self) -> &QuadraticPotential {
        &self.items[0]
    }

    pub fn last(&self) -> &QuadraticPotential {
        &self.items[self.items.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub sweeps_used: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

/// Output of the alternating iteration.
#[derive(Debug, Clone)]
pub struct SolvedPotentials {
    pub phi_0: QuadraticPotential,
    pub phi_k: QuadraticPotential,
    /// Backward pass from the final `phi_k`; used for kernel synthesis.
    pub final_backward: PotentialSequence,
    /// Forward pass from the final `phi_0`.
    pub final_forward: PotentialSequence,
    pub diagnostics: SolveDiagnostics,
}

fn scaled(m: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    m / eps
}

/// One backward step: `φ_{k+1}^⊖ ↦ φ_k^⊖`.
pub fn backward_step(
    s: &Scenario,
    k: usize,
    next: &QuadraticPotential,
) -> Result<QuadraticPotential> {
    let c = &s.cost;
    let eps = c.epsilon;
    let p_next = next.precision();
    let s_k = symmetrize(&(scaled(&c.kinetic[k], eps) + p_next));
    let s_fac = SpdFactor::new(&s_k).map_err(|e| e.located(None, Some(k)))?;
    let correction = p_next * s_fac.solve_matrix(p_next);
    let q_eps = scaled(&c.potential[k], eps);
    let precision = symmetrize(&(&q_eps + p_next - correction));
    let p_fac = SpdFactor::new(&precision).map_err(|e| e.located(None, Some(k)))?;

    let drift = if c.is_free(k) {
        next.drift().clone()
    } else {
        let pull = &q_eps * (&c.waypoints[k] - next.drift());
        next.drift() + p_fac.solve(&pull)
    };
    Ok(QuadraticPotential::from_parts(precision, drift))
}

/// One forward step: `φ_k^⊕ ↦ φ_{k+1}^⊕`.
pub fn forward_step(
    s: &Scenario,
    k: usize,
    cur: &QuadraticPotential,
) -> Result<QuadraticPotential> {
    let c = &s.cost;
    let eps = c.epsilon;
    let q_eps = scaled(&c.potential[k], eps);
    let m = symmetrize(&(&q_eps + cur.precision()));
    let m_fac = SpdFactor::new(&m).map_err(|e| e.located(None, Some(k)))?;
    let r_inv = SpdFactor::new(&c.kinetic[k])
        .map_err(|e| e.located(None, Some(k)))?
        .inverse();
    let cov = symmetrize(&(r_inv * eps + m_fac.inverse()));
    let precision = SpdFactor::new(&cov)
        .map_err(|e| e.located(None, Some(k)))?
        .inverse();

    let drift = if c.is_free(k) {
        cur.drift().clone()
    } else {
        let pull = &q_eps * (&c.waypoints[k] - cur.drift());
        cur.drift() + m_fac.solve(&pull)
    };
    Ok(QuadraticPotential::from_parts(precision, drift))
}

fn check_potential_dim(s: &Scenario, p: &QuadraticPotential) -> Result<()> {
    if p.dim() != s.dim() {
        return Err(BridgeError::DimensionMismatch {
            expected: s.dim(),
            found: p.dim(),
        });
    }
    Ok(())
}

pub fn backward_sweep(s: &Scenario, phi_k: &QuadraticPotential) -> Result<PotentialSequence> {
    check_potential_dim(s, phi_k)?;
    let horizon = s.horizon();
    let mut items = Vec::with_capacity(horizon + 1);
    items.push(phi_k.clone());
    for k in (0..horizon).rev() {
        let next = backward_step(s, k, items.last().expect("non-empty"))?;
        items.push(next);
    }
    items.reverse();
    Ok(PotentialSequence {
        direction: Direction::Backward,
        items,
    })
}

pub fn forward_sweep(s: &Scenario, phi_0: &QuadraticPotential) -> Result<PotentialSequence> {
    check_potential_dim(s, phi_0)?;
    let horizon = s.horizon();
    let mut items = Vec::with_capacity(horizon + 1);
    items.push(phi_0.clone());
    for k in 0..horizon {
        let next = forward_step(s, k, &items[k])?;
        items.push(next);
    }
    Ok(PotentialSequence {
        direction: Direction::Forward,
        items,
    })
}

/// `φ_0 = p_0 / φ_0^⊖`.
pub fn update_initial_potential(
    s: &Scenario,
    backward: &PotentialSequence,
) -> Result<QuadraticPotential> {
    divide(s.p0(), backward.first())
}

/// `φ_K = p_K / φ_K^⊕`.
pub fn update_terminal_potential(
    s: &Scenario,
    forward: &PotentialSequence,
) -> Result<QuadraticPotential> {
    divide(s.pk(), forward.last())
}

/// Relative parameter change used as the convergence residual.
pub fn parameter_change(old: &QuadraticPotential, new: &QuadraticPotential) -> f64 {
    let dp = (new.precision() - old.precision()).norm() / (1.0 + new.precision().norm());
    let da = (new.drift() - old.drift()).norm() / (1.0 + new.drift().norm());
    dp + da
}

/// Run the alternation from `phi_k` = `p_K` in information form.
///
/// Non-convergence is reported through the diagnostics rather than as an
/// error; see [`solve`] for the strict variant.
pub fn run_sweeps(s: &Scenario) -> Result<SolvedPotentials> {
    let init = s.pk().to_potential()?;
    run_sweeps_from(s, init)
}

/// As [`run_sweeps`], starting from a caller-chosen terminal potential.
pub fn run_sweeps_from(s: &Scenario, phi_k_init: QuadraticPotential) -> Result<SolvedPotentials> {
    let violations = s.validate();
    if !violations.is_empty() {
        return Err(BridgeError::InvalidScenario(violations));
    }
    check_potential_dim(s, &phi_k_init)?;

    let settings = s.solver;
    let mut phi_k = phi_k_init;
    let mut phi_0 = s.p0().to_potential()?;
    let mut history = Vec::new();
    let mut converged = false;
    let mut last_forward = None;

    for sweep in 1..=settings.max_sweeps {
        let at = |e: BridgeError| e.located(Some(sweep), None);
        let back = backward_sweep(s, &phi_k).map_err(at)?;
        let new_0 = update_initial_potential(s, &back).map_err(at)?;
        let fwd = forward_sweep(s, &new_0).map_err(at)?;
        let new_k = update_terminal_potential(s, &fwd).map_err(at)?;

        let residual = parameter_change(&phi_0, &new_0).max(parameter_change(&phi_k, &new_k));
        history.push(residual);
        phi_0 = new_0;
        phi_k = new_k;
        last_forward = Some(fwd);
        if residual <= settings.tol {
            converged = true;
            break;
        }
    }

    let sweeps_used = history.len();
    let final_backward =
        backward_sweep(s, &phi_k).map_err(|e| e.located(Some(sweeps_used + 1), None))?;
    let final_forward = match last_forward {
        Some(f) => f,
        None => forward_sweep(s, &phi_0)?,
    };
    Ok(SolvedPotentials {
        phi_0,
        phi_k,
        final_backward,
        final_forward,
        diagnostics: SolveDiagnostics {
            sweeps_used,
            residual_history: history,
            converged,
        },
    })
}

/// Run the alternation and fail with [`BridgeError::NotConverged`] if the
/// residual never drops below the tolerance.
pub fn solve(s: &Scenario) -> Result<SolvedPotentials> {
    let out = run_sweeps(s)?;
    if out.diagnostics.converged {
        Ok(out)
    } else {
        Err(BridgeError::NotConverged(Box::new(out.diagnostics)))
    }
}

/// Backward precisions using the un-Woodburied form
/// `Q/ε + (εR⁻¹ + P⁻¹)⁻¹`; kept for cross-checking [`backward_step`].
pub fn backward_precision_direct(
    kinetic: &DMatrix<f64>,
    potential: &DMatrix<f64>,
    epsilon: f64,
    p_next: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let r_inv = SpdFactor::new(kinetic)?.inverse();
    let p_inv = SpdFactor::new(p_next)?.inverse();
    let inner = SpdFactor::new(&(r_inv * epsilon + p_inv))?.inverse();
    Ok(symmetrize(&(potential / epsilon + inner)))
}
