//! Command implementations behind the `lqr-bridge` binary.

use std::path::{Path, PathBuf};
use std::time::Instant;

use lqr_bridge::grid_oracle::{moments_of, solve_grid_1d, GridSpec};
use lqr_bridge::{run_sweeps, sample_paths, BridgeError, BridgeSolution, Scenario};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::outputs::{self, RunReport, SolutionDoc};
use crate::plot::Figure;
use crate::scenario_file::{read_scenario_file, ScenarioFile};

/// Maximum IPF iterations for the grid oracle.
pub const ORACLE_MAX_ITERS: usize = 50_000;
/// Endpoint total-variation tolerance for the grid oracle.
pub const ORACLE_TV_TOL: f64 = 1e-10;

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Solve without failing on non-convergence; the report carries the flag.
pub fn solve_scenario(s: &Scenario) -> Result<(BridgeSolution, f64)> {
    let t = Instant::now();
    let pots = run_sweeps(s)?;
    let sol = BridgeSolution::from_potentials(s, pots)?;
    Ok((sol, t.elapsed().as_secs_f64()))
}

fn load(path: &Path) -> Result<(ScenarioFile, Scenario)> {
    let doc = read_scenario_file(path)?;
    let s = doc.to_scenario()?;
    Ok((doc, s))
}

/// Writes `solution.json`, `marginals.csv`, `report.json` and a copy of the
/// scenario (`scenario.json`) used later by `plot`.
pub fn cmd_solve(scenario: &Path, out: &Path) -> Result<RunReport> {
    let (doc, s) = load(scenario)?;
    ensure_dir(out)?;
    let (sol, wall) = solve_scenario(&s)?;
    let report = RunReport::new(&s, &sol, wall);
    outputs::write_text(&out.join(outputs::SCENARIO_FILE), &doc.to_json())?;
    outputs::write_json(
        &out.join(outputs::SOLUTION_FILE),
        &SolutionDoc::new(&s, &sol),
    )?;
    outputs::write_marginals(&out.join(outputs::MARGINALS_FILE), &sol.marginals)?;
    outputs::write_json(&out.join(outputs::REPORT_FILE), &report)?;
    Ok(report)
}

/// Writes `paths.csv` with `n_paths` trajectories.
pub fn cmd_sample(scenario: &Path, out: &Path, n_paths: usize, seed: u64) -> Result<RunReport> {
    if n_paths == 0 {
        return Err(CliError::Usage("--paths must be at least 1".into()));
    }
    let (_, s) = load(scenario)?;
    ensure_dir(out)?;
    let (sol, wall) = solve_scenario(&s)?;
    let paths = sample_paths(&s, &sol.kernels, n_paths, seed)?;
    outputs::write_paths(&out.join(outputs::PATHS_FILE), &paths)?;
    Ok(RunReport::new(&s, &sol, wall))
}

/// Writes `figure.svg` from the files of a previous `solve` (and `sample`).
pub fn cmd_plot(out: &Path, sigma: f64) -> Result<PathBuf> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(CliError::Usage("--sigma must be positive".into()));
    }
    let need = |name: &str| -> Result<PathBuf> {
        let p = out.join(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(CliError::MissingInput(format!(
                "{} (run `solve` first)",
                p.display()
            )))
        }
    };
    let doc = read_scenario_file(&need(outputs::SCENARIO_FILE)?)?;
    let marginals = outputs::read_marginals(&need(outputs::MARGINALS_FILE)?)?;
    let paths_file = out.join(outputs::PATHS_FILE);
    let paths = if paths_file.is_file() {
        outputs::read_paths(&paths_file)?
    } else {
        Vec::new()
    };
    let fig = Figure::build(&doc, &marginals, &paths, sigma);
    let target = out.join(outputs::FIGURE_FILE);
    outputs::write_text(&target, &fig.to_svg())?;
    Ok(target)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Span {
    Auto,
    Fixed(f64, f64),
}

impl std::str::FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(Span::Auto);
        }
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| format!("expected `auto` or `lo,hi`, got `{s}`"))?;
        let lo: f64 = lo
            .trim()
            .parse()
            .map_err(|e| format!("bad lower bound: {e}"))?;
        let hi: f64 = hi
            .trim()
            .parse()
            .map_err(|e| format!("bad upper bound: {e}"))?;
        Ok(Span::Fixed(lo, hi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleStep {
    pub k: usize,
    pub closed_mean: f64,
    pub closed_std: f64,
    pub grid_mean: f64,
    pub grid_std: f64,
    pub mean_delta: f64,
    pub std_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub pass: bool,
    pub grid_points: usize,
    pub lo: f64,
    pub hi: f64,
    pub spacing: f64,
    pub tolerance: f64,
    pub max_mean_delta: f64,
    pub max_std_delta: f64,
    pub grid_iterations: usize,
    pub closed_form_converged: bool,
    /// Set when the grid solver did not converge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub steps: Vec<OracleStep>,
}

/// Compare the closed-form marginals with the grid oracle on a
/// one-dimensional scenario. Passes when every per-step mean and standard
/// deviation delta is at most `max(1e-2, 3h)`.
pub fn oracle_check(s: &Scenario, n_points: usize, span: Span) -> Result<OracleReport> {
    if s.dim() != 1 {
        return Err(BridgeError::DimensionNotSupported(s.dim()).into());
    }
    let grid = match span {
        Span::Auto => GridSpec::auto(s, n_points),
        Span::Fixed(lo, hi) => GridSpec::new(n_points, lo, hi),
    }
    .map_err(|e| CliError::Usage(format!("grid: {e}")))?;
    let h = grid.spacing();
    let tolerance = (3.0 * h).max(1e-2);

    let (sol, _) = solve_scenario(s)?;
    let mut report = OracleReport {
        pass: false,
        grid_points: n_points,
        lo: grid.lo,
        hi: grid.hi,
        spacing: h,
        tolerance,
        max_mean_delta: f64::NAN,
        max_std_delta: f64::NAN,
        grid_iterations: 0,
        closed_form_converged: sol.diagnostics().converged,
        failure: None,
        steps: Vec::new(),
    };
    let discrete = match solve_grid_1d(s, &grid, ORACLE_MAX_ITERS, ORACLE_TV_TOL) {
        Ok(d) => d,
        Err(BridgeError::NotConverged(diag)) => {
            report.grid_iterations = diag.sweeps_used;
            report.failure = Some(format!(
                "grid IPF did not converge (last TV {:.3e})",
                diag.residual_history.last().copied().unwrap_or(f64::NAN)
            ));
            return Ok(report);
        }
        Err(e) => return Err(e.into()),
    };
    report.grid_iterations = discrete.tv_history.len();

    for (k, g) in sol.marginals.items.iter().enumerate() {
        let (gm, gs) = moments_of(&discrete, &grid, k)?;
        let (cm, cs) = (g.mean()[0], g.cov()[(0, 0)].sqrt());
        report.steps.push(OracleStep {
            k,
            closed_mean: cm,
            closed_std: cs,
            grid_mean: gm,
            grid_std: gs,
            mean_delta: (cm - gm).abs(),
            std_delta: (cs - gs).abs(),
        });
    }
    report.max_mean_delta = report
        .steps
        .iter()
        .map(|s| s.mean_delta)
        .fold(0.0, f64::max);
    report.max_std_delta = report.steps.iter().map(|s| s.std_delta).fold(0.0, f64::max);
    report.pass = report.closed_form_converged
        && report.max_mean_delta <= tolerance
        && report.max_std_delta <= tolerance;
    Ok(report)
}

/// Writes `oracle_report.json` into `out`.
pub fn cmd_oracle_check(
    scenario: &Path,
    out: &Path,
    n_points: usize,
    span: Span,
) -> Result<OracleReport> {
    let (_, s) = load(scenario)?;
    let report = oracle_check(&s, n_points, span)?;
    ensure_dir(out)?;
    outputs::write_json(&out.join(outputs::ORACLE_FILE), &report)?;
    Ok(report)
}
