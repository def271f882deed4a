//! Problem data: the per-step LQR cost, temperature, boundary marginals and
//! solver settings, plus validation and loss evaluation.

use nalgebra::{DMatrix, DVector};

use crate::error::{BridgeError, Result};
use crate::gaussian::Gaussian;
use crate::spd::{is_symmetric, min_eigenvalue, SPD_EIGEN_FLOOR};

/// Per-step quadratic cost `½(x−x*ₖ)ᵀQₖ(x−x*ₖ) + ½(y−x)ᵀRₖ(y−x)` with
/// temperature `epsilon`.
///
/// `potential[k]` may be the zero matrix; `waypoints[k]` is then unused.
/// The time step is fixed at one.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSchedule {
    pub kinetic: Vec<DMatrix<f64>>,
    pub potential: Vec<DMatrix<f64>>,
    pub waypoints: Vec<DVector<f64>>,
    pub epsilon: f64,
}

impl CostSchedule {
    /// `R_k = r·I`, `Q_k = q·I` attracting to the origin, for `k < horizon`.
    pub fn constant(dim: usize, horizon: usize, r: f64, q: f64, epsilon: f64) -> Self {
        Self {
            kinetic: vec![DMatrix::identity(dim, dim) * r; horizon],
            potential: vec![DMatrix::identity(dim, dim) * q; horizon],
            waypoints: vec![DVector::zeros(dim); horizon],
            epsilon,
        }
    }

    pub fn horizon(&self) -> usize {
        self.kinetic.len()
    }

    /// Whether `Q_k` is exactly zero.
    pub fn is_free(&self, k: usize) -> bool {
        self.potential[k].iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMarginals {
    pub p0: Gaussian,
    pub pk: Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub cost: CostSchedule,
    pub boundaries: BoundaryMarginals,
    pub solver: SolverSettings,
}

/// One failed check: a field path such as `kinetic[3]` and a message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl Scenario {
    pub fn new(cost: CostSchedule, p0: Gaussian, pk: Gaussian) -> Self {
        Self {
            cost,
            boundaries: BoundaryMarginals { p0, pk },
            solver: SolverSettings::default(),
        }
    }

    /// Build and reject anything [`Scenario::validate`] complains about.
    pub fn validated(self) -> Result<Self> {
        let v = self.validate();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(BridgeError::InvalidScenario(v))
        }
    }

    pub fn with_solver(mut self, solver: SolverSettings) -> Self {
        self.solver = solver;
        self
    }

    pub fn dim(&self) -> usize {
        self.boundaries.p0.dim()
    }

    pub fn horizon(&self) -> usize {
        self.cost.horizon()
    }

    pub fn p0(&self) -> &Gaussian {
        &self.boundaries.p0
    }

    pub fn pk(&self) -> &Gaussian {
        &self.boundaries.pk
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let d = self.dim();
        let c = &self.cost;
        let horizon = c.kinetic.len();

        if !c.epsilon.is_finite() || c.epsilon <= 0.0 {
            out.push(Violation::new(
                "epsilon",
                format!("must be a positive finite number, got {}", c.epsilon),
            ));
        }
        if horizon == 0 {
            out.push(Violation::new("horizon", "must be at least 1"));
        }
        if c.potential.len() != horizon {
            out.push(Violation::new(
                "potential",
                format!("expected {horizon} entries, found {}", c.potential.len()),
            ));
        }
        if c.waypoints.len() != horizon {
            out.push(Violation::new(
                "waypoints",
                format!("expected {horizon} entries, found {}", c.waypoints.len()),
            ));
        }
        if self.solver.tol.is_nan() || self.solver.tol <= 0.0 {
            out.push(Violation::new("solver.tol", "must be positive"));
        }
        if self.solver.max_sweeps == 0 {
            out.push(Violation::new("solver.max_sweeps", "must be at least 1"));
        }

        for (name, g) in [("p0", &self.boundaries.p0), ("pK", &self.boundaries.pk)] {
            check_matrix(
                &mut out,
                &format!("{name}.cov"),
                g.cov(),
                d,
                Definiteness::Positive,
            );
            if g.mean().len() != d {
                out.push(Violation::new(
                    format!("{name}.mean"),
                    format!("expected dimension {d}, found {}", g.mean().len()),
                ));
            }
            if g.mean().iter().any(|v| !v.is_finite()) {
                out.push(Violation::new(format!("{name}.mean"), "non-finite entry"));
            }
        }
        for (k, r) in c.kinetic.iter().enumerate() {
            check_matrix(
                &mut out,
                &format!("kinetic[{k}]"),
                r,
                d,
                Definiteness::Positive,
            );
        }
        for (k, q) in c.potential.iter().enumerate() {
            check_matrix(
                &mut out,
                &format!("potential[{k}]"),
                q,
                d,
                Definiteness::SemiPositive,
            );
        }
        for (k, x) in c.waypoints.iter().enumerate() {
            if x.len() != d {
                out.push(Violation::new(
                    format!("waypoints[{k}]"),
                    format!("expected dimension {d}, found {}", x.len()),
                ));
            } else if x.iter().any(|v| !v.is_finite()) {
                out.push(Violation::new(
                    format!("waypoints[{k}]"),
                    "non-finite entry",
                ));
            }
        }
        out
    }
}

#[derive(Clone, Copy)]
enum Definiteness {
    Positive,
    SemiPositive,
}

fn check_matrix(
    out: &mut Vec<Violation>,
    field: &str,
    m: &DMatrix<f64>,
    d: usize,
    kind: Definiteness,
) {
    if m.nrows() != d || m.ncols() != d {
        out.push(Violation::new(
            field,
            format!("expected {d}x{d}, found {}x{}", m.nrows(), m.ncols()),
        ));
        return;
    }
    if m.iter().any(|v| !v.is_finite()) {
        out.push(Violation::new(field, "non-finite entry"));
        return;
    }
    if !is_symmetric(m) {
        out.push(Violation::new(field, "not symmetric"));
        return;
    }
    let lam = min_eigenvalue(m);
    match kind {
        Definiteness::Positive if lam.is_nan() || lam <= SPD_EIGEN_FLOOR => {
            out.push(Violation::new(
                field,
                format!("not positive definite (minimum eigenvalue {lam:.3e})"),
            ))
        }
        Definiteness::SemiPositive if lam < -SPD_EIGEN_FLOOR => out.push(Violation::new(
            field,
            format!("not positive semidefinite (minimum eigenvalue {lam:.3e})"),
        )),
        _ => {}
    }
}

/// `ℓ_k(x, y)` for one step.
pub fn pairwise_loss(s: &Scenario, k: usize, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
    let horizon = s.horizon();
    if k >= horizon {
        return Err(BridgeError::IndexOutOfRange {
            index: k,
            limit: horizon,
        });
    }
    let d = s.dim();
    for v in [x, y] {
        if v.len() != d {
            return Err(BridgeError::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
    }
    let c = &s.cost;
    let dev = x - &c.waypoints[k];
    let step = y - x;
    let pot = if c.is_free(k) {
        0.0
    } else {
        dev.dot(&(&c.potential[k] * &dev))
    };
    let kin = step.dot(&(&c.kinetic[k] * &step));
    Ok(0.5 * pot + 0.5 * kin)
}

/// Sum of pairwise losses along a path of `K+1` points.
pub fn path_loss(s: &Scenario, path: &[DVector<f64>]) -> Result<f64> {
    let horizon = s.horizon();
    if path.len() != horizon + 1 {
        return Err(BridgeError::LengthMismatch {
            expected: horizon + 1,
            found: path.len(),
        });
    }
    path.windows(2)
        .enumerate()
        .map(|(k, w)| pairwise_loss(s, k, &w[0], &w[1]))
        .sum()
}
