//! Result files written by the commands.
//!
//! All numbers go through Rust's shortest round-trip float formatting, so
//! files are byte-identical for equal inputs on every machine.

use std::path::Path;

use lqr_bridge::{
    BridgeSolution, Gaussian, MarginalPath, Path as Trajectory, QuadraticPotential, Scenario,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::scenario_file::Matrix;

pub const SCHEMA_VERSION: u32 = 1;

pub const SOLUTION_FILE: &str = "solution.json";
pub const MARGINALS_FILE: &str = "marginals.csv";
pub const REPORT_FILE: &str = "report.json";
pub const SCENARIO_FILE: &str = "scenario.json";
pub const PATHS_FILE: &str = "paths.csv";
pub const FIGURE_FILE: &str = "figure.svg";
pub const ORACLE_FILE: &str = "oracle_report.json";

fn rows(m: &DMatrix<f64>) -> Matrix {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn entries(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialDoc {
    pub precision: Matrix,
    pub drift: Vec<f64>,
}

impl From<&QuadraticPotential> for PotentialDoc {
    fn from(p: &QuadraticPotential) -> Self {
        Self {
            precision: rows(p.precision()),
            drift: entries(p.drift()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDoc {
    pub k: usize,
    #[serde(rename = "S")]
    pub noise_precision: Matrix,
    #[serde(rename = "G")]
    pub gain: Matrix,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub schema_version: u32,
    pub dim: usize,
    pub horizon: usize,
    pub epsilon: f64,
    pub converged: bool,
    pub phi_0: PotentialDoc,
    #[serde(rename = "phi_K")]
    pub phi_k: PotentialDoc,
    /// Backward-propagated potentials `k = 0..=K` of the final pass.
    pub backward_potentials: Vec<PotentialDoc>,
    pub kernels: Vec<KernelDoc>,
}

impl SolutionDoc {
    pub fn new(s: &Scenario, sol: &BridgeSolution) -> Self {
        let p = &sol.potentials;
        Self {
            schema_version: SCHEMA_VERSION,
            dim: s.dim(),
            horizon: s.horizon(),
            epsilon: s.cost.epsilon,
            converged: p.diagnostics.converged,
            phi_0: (&p.phi_0).into(),
            phi_k: (&p.phi_k).into(),
            backward_potentials: p.final_backward.items.iter().map(Into::into).collect(),
            kernels: sol
                .kernels
                .iter()
                .enumerate()
                .map(|(k, step)| KernelDoc {
                    k,
                    noise_precision: rows(step.noise_precision()),
                    gain: rows(step.gain()),
                    beta: entries(step.drift()),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub converged: bool,
    pub sweeps_used: usize,
    pub residual_history: Vec<f64>,
    /// `‖μ_K − μ_target‖ / max(‖μ_target‖, 1)` for the rolled-out marginal.
    pub endpoint_mean_error: f64,
    /// `‖Σ_K − Σ_target‖_F / ‖Σ_target‖_F`.
    pub endpoint_cov_error: f64,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(s: &Scenario, sol: &BridgeSolution, wall_time_s: f64) -> Self {
        let (endpoint_mean_error, endpoint_cov_error) = endpoint_errors(s, &sol.marginals);
        let d = &sol.potentials.diagnostics;
        Self {
            converged: d.converged,
            sweeps_used: d.sweeps_used,
            residual_history: d.residual_history.clone(),
            endpoint_mean_error,
            endpoint_cov_error,
            wall_time_s,
        }
    }
}

/// Relative mismatch between the last rolled-out marginal and `p_K`.
pub fn endpoint_errors(s: &Scenario, m: &MarginalPath) -> (f64, f64) {
    let last = m.items.last().expect("rollout has K+1 items");
    let target = s.pk();
    let mean = (last.mean() - target.mean()).norm() / target.mean().norm().max(1.0);
    let cov = (last.cov() - target.cov()).norm() / target.cov().norm();
    (mean, cov)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

/// `k, mean_0.., cov_00..` (row-major), one row per step.
pub fn write_marginals(path: &Path, m: &MarginalPath) -> Result<()> {
    let d = m.items.first().map_or(0, Gaussian::dim);
    let mut w = csv_writer(path)?;
    let mut header = vec!["k".to_string()];
    header.extend((0..d).map(|i| format!("mean_{i}")));
    header.extend((0..d).flat_map(|i| (0..d).map(move |j| format!("cov_{i}{j}"))));
    w.write_record(&header)?;
    for (k, g) in m.items.iter().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(g.mean().iter().map(f64::to_string));
        rec.extend((0..d).flat_map(|i| (0..d).map(move |j| g.cov()[(i, j)].to_string())));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Marginal moments read back from `marginals.csv`.
pub fn read_marginals(path: &Path) -> Result<Vec<(DVector<f64>, DMatrix<f64>)>> {
    let mut r = csv::Reader::from_path(path)?;
    let width = r.headers()?.len();
    let d = (((4 * (width - 1) + 1) as f64).sqrt() as usize - 1) / 2;
    if d * d + d + 1 != width {
        return Err(CliError::MissingInput(format!(
            "{}: unexpected column count {width}",
            path.display()
        )));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))
                })
                .collect::<Result<_>>()?;
            let mean = DVector::from_column_slice(&vals[..d]);
            let cov = DMatrix::from_row_slice(d, d, &vals[d..]);
            Ok((mean, cov))
        })
        .collect()
}

/// `path_id, k, x_0..` rows.
pub fn write_paths(path: &Path, paths: &[Trajectory]) -> Result<()> {
    let d = paths.first().and_then(|p| p.first()).map_or(0, |x| x.len());
    let mut w = csv_writer(path)?;
    let mut header = vec!["path_id".to_string(), "k".to_string()];
    header.extend((0..d).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    for (id, p) in paths.iter().enumerate() {
        for (k, x) in p.iter().enumerate() {
            let mut rec = vec![id.to_string(), k.to_string()];
            rec.extend(x.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Trajectories grouped by `path_id`, in file order.
pub fn read_paths(path: &Path) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out: Vec<Vec<Vec<f64>>> = Vec::new();
    let mut current: Option<String> = None;
    for rec in r.records() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default().to_string();
        let x: Vec<f64> = rec
            .iter()
            .skip(2)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| CliError::MissingInput(format!("{}: {e}", path.display())))
            })
            .collect::<Result<_>>()?;
        if current.as_deref() != Some(id.as_str()) {
            out.push(Vec::new());
            current = Some(id);
        }
        out.last_mut().expect("pushed").push(x);
    }
    Ok(out)
}
