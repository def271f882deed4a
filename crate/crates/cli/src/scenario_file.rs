//! JSON scenario documents.
//!
//! ```json
//! {
//!   "dim": 2, "horizon": 100, "epsilon": 1.0,
//!   "p0": {"mean": [0, 0], "cov": [[1e-6, 0], [0, 1e-6]]},
//!   "pK": {"mean": [1, 1], "cov": [[1e-6, 0], [0, 1e-6]]},
//!   "kinetic": {"r": 100},
//!   "potential": {"default_q": 0, "waypoints": [{"k": 50, "x_star": [0, 1], "q": 0.3}]},
//!   "solver": {"tol": 1e-8, "max_sweeps": 100}
//! }
//! ```
//!
//! `kinetic` takes exactly one of `r` (for `r·I`), `R` (a matrix) or
//! `per_step` (a list of `{r}` / `{R}` entries, one per step). `Q_k` is
//! `default_q·I` centred on `default_x_star` (origin when omitted) unless a
//! waypoint overrides step `k`. Unknown keys are rejected.

use std::path::Path;

use lqr_bridge::{CostSchedule, Gaussian, Scenario, SolverSettings, Violation};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub type Matrix = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub dim: usize,
    pub horizon: usize,
    pub epsilon: f64,
    pub p0: GaussianSpec,
    #[serde(rename = "pK")]
    pub pk: GaussianSpec,
    pub kinetic: KineticSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    pub mean: Vec<f64>,
    pub cov: Matrix,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, rename = "R", skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Matrix>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, rename = "R", skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_step: Option<Vec<KineticEntry>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default)]
    pub default_q: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_x_star: Option<Vec<f64>>,
    #[serde(default)]
    pub waypoints: Vec<Waypoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub k: usize,
    pub x_star: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(default, rename = "Q", skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
}

fn default_tol() -> f64 {
    SolverSettings::default().tol
}

fn default_max_sweeps() -> usize {
    SolverSettings::default().max_sweeps
}

fn violation(field: impl Into<String>, message: impl Into<String>) -> Violation {
    Violation {
        field: field.into(),
        message: message.into(),
    }
}

fn to_matrix(
    out: &mut Vec<Violation>,
    field: &str,
    rows: &Matrix,
    d: usize,
) -> Option<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        out.push(violation(field, format!("expected a {d}x{d} array")));
        return None;
    }
    Some(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn to_vector(out: &mut Vec<Violation>, field: &str, v: &[f64], d: usize) -> Option<DVector<f64>> {
    if v.len() != d {
        out.push(violation(
            field,
            format!("expected {d} entries, found {}", v.len()),
        ));
        return None;
    }
    Some(DVector::from_column_slice(v))
}

fn from_matrix(m: &DMatrix<f64>) -> Matrix {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn kinetic_entry(
    out: &mut Vec<Violation>,
    field: &str,
    r: Option<f64>,
    m: Option<&Matrix>,
    d: usize,
) -> Option<DMatrix<f64>> {
    match (r, m) {
        (Some(r), None) => Some(DMatrix::identity(d, d) * r),
        (None, Some(m)) => to_matrix(out, &format!("{field}.R"), m, d),
        _ => {
            out.push(violation(field, "expected exactly one of `r` or `R`"));
            None
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key_path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Parse {
                path: path.to_path_buf(),
                key_path,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// Convert to a [`Scenario`], collecting every structural violation and
    /// then running [`Scenario::validate`].
    pub fn to_scenario(&self) -> Result<Scenario> {
        let d = self.dim;
        let horizon = self.horizon;
        let mut v = Vec::new();
        if d == 0 {
            v.push(violation("dim", "must be at least 1"));
            return Err(CliError::Validation(v));
        }
        if horizon == 0 {
            v.push(violation("horizon", "must be at least 1"));
        }

        let gauss = |v: &mut Vec<Violation>, name: &str, g: &GaussianSpec| {
            let mean = to_vector(v, &format!("{name}.mean"), &g.mean, d);
            let cov = to_matrix(v, &format!("{name}.cov"), &g.cov, d);
            mean.zip(cov)
        };
        let p0 = gauss(&mut v, "p0", &self.p0);
        let pk = gauss(&mut v, "pK", &self.pk);

        let kin = &self.kinetic;
        let kinetic: Vec<DMatrix<f64>> = match (kin.r, &kin.matrix, &kin.per_step) {
            (Some(_), None, None) | (None, Some(_), None) => {
                kinetic_entry(&mut v, "kinetic", kin.r, kin.matrix.as_ref(), d)
                    .map(|m| vec![m; horizon])
                    .unwrap_or_default()
            }
            (None, None, Some(steps)) => {
                if steps.len() != horizon {
                    v.push(violation(
                        "kinetic.per_step",
                        format!("expected {horizon} entries, found {}", steps.len()),
                    ));
                }
                steps
                    .iter()
                    .enumerate()
                    .filter_map(|(k, e)| {
                        kinetic_entry(
                            &mut v,
                            &format!("kinetic.per_step[{k}]"),
                            e.r,
                            e.matrix.as_ref(),
                            d,
                        )
                    })
                    .collect()
            }
            _ => {
                v.push(violation(
                    "kinetic",
                    "expected exactly one of `r`, `R` or `per_step`",
                ));
                Vec::new()
            }
        };

        let pot = &self.potential;
        let default_x = match &pot.default_x_star {
            Some(x) => to_vector(&mut v, "potential.default_x_star", x, d)
                .unwrap_or_else(|| DVector::zeros(d)),
            None => DVector::zeros(d),
        };
        let mut potential = vec![DMatrix::identity(d, d) * pot.default_q; horizon];
        let mut waypoints = vec![default_x; horizon];
        let mut seen = vec![false; horizon];
        for (i, w) in pot.waypoints.iter().enumerate() {
            let field = format!("potential.waypoints[{i}]");
            if w.k >= horizon {
                v.push(violation(
                    format!("{field}.k"),
                    format!("step {} outside 0..{horizon}", w.k),
                ));
                continue;
            }
            if std::mem::replace(&mut seen[w.k], true) {
                v.push(violation(
                    format!("{field}.k"),
                    format!("step {} given twice", w.k),
                ));
            }
            let q = match (w.q, &w.matrix) {
                (Some(q), None) => Some(DMatrix::identity(d, d) * q),
                (None, Some(m)) => to_matrix(&mut v, &format!("{field}.Q"), m, d),
                _ => {
                    v.push(violation(&field, "expected exactly one of `q` or `Q`"));
                    None
                }
            };
            let x = to_vector(&mut v, &format!("{field}.x_star"), &w.x_star, d);
            if let (Some(q), Some(x)) = (q, x) {
                potential[w.k] = q;
                waypoints[w.k] = x;
            }
        }

        if !v.is_empty() {
            return Err(CliError::Validation(v));
        }
        let (m0, c0) = p0.expect("checked");
        let (mk, ck) = pk.expect("checked");
        let solver = match &self.solver {
            Some(sv) => SolverSettings {
                tol: sv.tol,
                max_sweeps: sv.max_sweeps,
            },
            None => SolverSettings::default(),
        };
        let s = Scenario {
            cost: CostSchedule {
                kinetic,
                potential,
                waypoints,
                epsilon: self.epsilon,
            },
            boundaries: lqr_bridge::BoundaryMarginals {
                p0: Gaussian::new_unchecked(m0, c0),
                pk: Gaussian::new_unchecked(mk, ck),
            },
            solver,
        };
        let violations = s.validate();
        if violations.is_empty() {
            Ok(s)
        } else {
            Err(CliError::Validation(violations))
        }
    }

    /// Canonical document for a scenario: per-step kinetic matrices and one
    /// waypoint entry for every step with a non-zero potential.
    pub fn from_scenario(s: &Scenario) -> Self {
        let c = &s.cost;
        let d = s.dim();
        let gauss = |g: &Gaussian| GaussianSpec {
            mean: g.mean().iter().copied().collect(),
            cov: from_matrix(g.cov()),
        };
        let waypoints = (0..c.horizon())
            .filter(|&k| !c.is_free(k))
            .map(|k| Waypoint {
                k,
                x_star: c.waypoints[k].iter().copied().collect(),
                q: None,
                matrix: Some(from_matrix(&c.potential[k])),
            })
            .collect();
        ScenarioFile {
            description: None,
            dim: d,
            horizon: c.horizon(),
            epsilon: c.epsilon,
            p0: gauss(s.p0()),
            pk: gauss(s.pk()),
            kinetic: KineticSpec {
                per_step: Some(
                    c.kinetic
                        .iter()
                        .map(|r| KineticEntry {
                            r: None,
                            matrix: Some(from_matrix(r)),
                        })
                        .collect(),
                ),
                ..Default::default()
            },
            potential: PotentialSpec {
                default_q: 0.0,
                default_x_star: None,
                waypoints,
            },
            solver: Some(SolverSpec {
                tol: s.solver.tol,
                max_sweeps: s.solver.max_sweeps,
            }),
        }
    }
}

pub fn read_scenario_file(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    ScenarioFile::parse(&text, path)
}

/// Parse and fully validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    read_scenario_file(path)?.to_scenario()
}
