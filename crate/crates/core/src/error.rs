use thiserror::Error;

use crate::problem::Violation;
use crate::solver::SolveDiagnostics;

pub type Result<T, E = BridgeError> = std::result::Result<T, E>;

/// Where in the solver pipeline a failure happened.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Location {
    pub sweep: Option<usize>,
    pub step: Option<usize>,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (self.sweep, self.step) {
            (Some(s), Some(k)) => write!(f, " (sweep {s}, step {k})"),
            (Some(s), None) => write!(f, " (sweep {s})"),
            (None, Some(k)) => write!(f, " (step {k})"),
            (None, None) => Ok(()),
        }
    }
}

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "matrix is not symmetric positive definite{at}: minimum eigenvalue {min_eigenvalue:.6e}"
    )]
    NotSpd { min_eigenvalue: f64, at: Location },

    #[error(
        "marginal precision does not dominate the propagated potential{at}: minimum eigenvalue of the \
         difference is {min_eigenvalue:.6e}; the scenario is infeasible within Gaussian potentials \
         (the marginal is tighter than the propagated potential allows)"
    )]
    NotDominated { min_eigenvalue: f64, at: Location },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("not converged after {} sweeps (last residual {:.3e})", .0.sweeps_used, .0.residual_history.last().copied().unwrap_or(f64::NAN))]
    NotConverged(Box<SolveDiagnostics>),

    #[error("grid weights underflowed: {0}")]
    Underflow(String),

    #[error("unsupported dimension {0}: only d = 1 is supported")]
    DimensionNotSupported(usize),

    #[error("invalid scenario: {}", format_violations(.0))]
    InvalidScenario(Vec<Violation>),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|v| format!("{}: {}", v.field, v.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl BridgeError {
    /// Attach sweep/step information to SPD-type failures.
    pub(crate) fn located(self, sweep: Option<usize>, step: Option<usize>) -> Self {
        let merge = |at: Location| Location {
            sweep: sweep.or(at.sweep),
            step: step.or(at.step),
        };
        match self {
            BridgeError::NotSpd { min_eigenvalue, at } => BridgeError::NotSpd {
                min_eigenvalue,
                at: merge(at),
            },
            BridgeError::NotDominated { min_eigenvalue, at } => BridgeError::NotDominated {
                min_eigenvalue,
                at: merge(at),
            },
            other => other,
        }
    }
}
