//! Brute-force reference solver for one-dimensional chains.
//!
//! The path measure is discretized on a uniform grid and solved by
//! iterative proportional fitting with log-space message passing. Nothing
//! here touches the Gaussian algebra used by the closed-form solver; only
//! raw scenario numbers are read.

use crate::error::{BridgeError, Result};
use crate::par::{fill_indexed, Execution};
use crate::problem::Scenario;
use crate::solver::SolveDiagnostics;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub n_points: usize,
    pub lo: f64,
    pub hi: f64,
}

impl GridSpec {
    pub fn new(n_points: usize, lo: f64, hi: f64) -> Result<Self> {
        if n_points < 101 {
            return Err(BridgeError::LengthMismatch {
                expected: 101,
                found: n_points,
            });
        }
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(BridgeError::Underflow(format!(
                "empty grid span [{lo}, {hi}]"
            )));
        }
        Ok(Self { n_points, lo, hi })
    }

    /// Span covering both marginals and every active waypoint with a margin
    /// of six standard deviations, where the deviation also accounts for
    /// the free diffusion accumulated along the horizon.
    pub fn auto(s: &Scenario, n_points: usize) -> Result<Self> {
        if s.dim() != 1 {
            return Err(BridgeError::DimensionNotSupported(s.dim()));
        }
        let c = &s.cost;
        let mut lo = s.p0().mean()[0].min(s.pk().mean()[0]);
        let mut hi = s.p0().mean()[0].max(s.pk().mean()[0]);
        for k in 0..c.horizon() {
            if !c.is_free(k) {
                lo = lo.min(c.waypoints[k][0]);
                hi = hi.max(c.waypoints[k][0]);
            }
        }
        let diffusion: f64 = c.kinetic.iter().map(|r| c.epsilon / r[(0, 0)]).sum();
        let sigma = s.p0().cov()[(0, 0)]
            .max(s.pk().cov()[(0, 0)])
            .max(diffusion / 4.0)
            .sqrt();
        Self::new(n_points, lo - 6.0 * sigma, hi + 6.0 * sigma)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n_points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + self.spacing() * i as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Trapezoidal quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_points)
            .map(|i| {
                if i == 0 || i + 1 == self.n_points {
                    0.5 * h
                } else {
                    h
                }
            })
            .collect()
    }

    /// Node masses of an unnormalized log-density, normalized to one.
    pub fn discretize_log(&self, log_density: impl Fn(f64) -> f64) -> Vec<f64> {
        let logs: Vec<f64> = self
            .nodes()
            .into_iter()
            .zip(self.weights())
            .map(|(x, w)| log_density(x) + w.ln())
            .collect();
        normalize_log(&logs)
    }
}

/// Node marginals `k = 0..=K`, each summing to one.
#[derive(Debug, Clone)]
pub struct DiscreteChainSolution {
    pub marginals: Vec<Vec<f64>>,
    /// Terminal total-variation mismatch after each iteration.
    pub tv_history: Vec<f64>,
    pub converged: bool,
}

fn normalize_log(logs: &[f64]) -> Vec<f64> {
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logs.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

fn log_sum_exp(it: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = it.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Toeplitz kinetic kernel `exp(-r (m h)² / 2ε)` in log and linear form.
struct KineticKernel {
    log: Vec<f64>,
    lin: Vec<f64>,
    band: usize,
}

impl KineticKernel {
    fn new(n: usize, h: f64, r: f64, eps: f64) -> Self {
        let log: Vec<f64> = (0..n)
            .map(|m| -r * (m as f64 * h).powi(2) / (2.0 * eps))
            .collect();
        let lin: Vec<f64> = log.iter().map(|l| l.exp()).collect();
        let band = lin.iter().rposition(|&v| v > 0.0).unwrap_or(0);
        Self { log, lin, band }
    }

    /// `u_i = log Σ_j K(|i-j|) exp(v_j)`.
    ///
    /// Rows whose scaled linear sum falls below `1e-200` are recomputed by
    /// an exact log-sum-exp over the whole grid.
    fn apply(&self, v: &[f64], exec: Execution) -> Vec<f64> {
        let n = v.len();
        let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = v.iter().map(|&x| (x - m).exp()).collect();
        let mut out = vec![0.0; n];
        fill_indexed(&mut out, exec, |i| {
            let lo = i.saturating_sub(self.band);
            let hi = (i + self.band).min(n - 1);
            let s: f64 = (lo..=hi).map(|j| self.lin[i.abs_diff(j)] * e[j]).sum();
            if s > 1e-200 {
                m + s.ln()
            } else {
                log_sum_exp((0..n).map(|j| self.log[i.abs_diff(j)] + v[j]))
            }
        });
        out
    }
}

/// Discrete IPF on the chain; stops when the terminal marginal is within
/// `tol` in total variation of the discretized `p_K`.
pub fn solve_grid_1d(
    s: &Scenario,
    g: &GridSpec,
    max_iters: usize,
    tol: f64,
) -> Result<DiscreteChainSolution> {
    solve_grid_1d_with(s, g, max_iters, tol, Execution::default())
}

pub fn solve_grid_1d_with(
    s: &Scenario,
    g: &GridSpec,
    max_iters: usize,
    tol: f64,
    exec: Execution,
) -> Result<DiscreteChainSolution> {
    if s.dim() != 1 {
        return Err(BridgeError::DimensionNotSupported(s.dim()));
    }
    let violations = s.validate();
    if !violations.is_empty() {
        return Err(BridgeError::InvalidScenario(violations));
    }
    let c = &s.cost;
    let eps = c.epsilon;
    let horizon = c.horizon();
    let n = g.n_points;
    let h = g.spacing();
    let xs = g.nodes();
    let logw: Vec<f64> = g.weights().into_iter().map(f64::ln).collect();

    let kinetic: Vec<KineticKernel> = (0..horizon)
        .map(|k| KineticKernel::new(n, h, c.kinetic[k][(0, 0)], eps))
        .collect();
    let attraction: Vec<Vec<f64>> = (0..horizon)
        .map(|k| {
            let q = c.potential[k][(0, 0)];
            let xs_k = c.waypoints[k][0];
            xs.iter()
                .map(|&x| -q * (x - xs_k).powi(2) / (2.0 * eps))
                .collect()
        })
        .collect();

    let log_gauss = |mean: f64, var: f64| -> Vec<f64> {
        xs.iter()
            .map(|&x| -(x - mean).powi(2) / (2.0 * var))
            .collect()
    };
    let log_p0 = log_gauss(s.p0().mean()[0], s.p0().cov()[(0, 0)]);
    let log_pk = log_gauss(s.pk().mean()[0], s.pk().cov()[(0, 0)]);
    let target_k = normalize_log(&add(&log_pk, &logw));

    let backward = |lb: &[f64]| -> Vec<Vec<f64>> {
        let mut msgs = vec![lb.to_vec()];
        for k in (0..horizon).rev() {
            let v = add(msgs.last().expect("non-empty"), &logw);
            let u = kinetic[k].apply(&v, exec);
            msgs.push(add(&u, &attraction[k]));
        }
        msgs.reverse();
        msgs
    };
    let forward = |la: &[f64]| -> Vec<Vec<f64>> {
        let mut msgs = vec![la.to_vec()];
        for k in 0..horizon {
            let v: Vec<f64> = (0..n)
                .map(|i| msgs[k][i] + attraction[k][i] + logw[i])
                .collect();
            msgs.push(kinetic[k].apply(&v, exec));
        }
        msgs
    };

    let mut lb = log_pk.clone();
    let mut la;
    let mut history = Vec::new();
    let mut converged = false;
    loop {
        let back = backward(&lb);
        la = shift_max(&sub(&log_p0, &back[0]));
        let fwd = forward(&la);
        let terminal = normalize_log(&add(&add(&fwd[horizon], &lb), &logw));
        if terminal.iter().any(|v| !v.is_finite()) {
            return Err(BridgeError::Underflow(
                "non-finite terminal marginal".into(),
            ));
        }
        let tv = total_variation(&terminal, &target_k);
        history.push(tv);
        lb = shift_max(&sub(&log_pk, &fwd[horizon]));
        if tv <= tol {
            converged = true;
            break;
        }
        if history.len() >= max_iters {
            break;
        }
    }
    if !converged {
        return Err(BridgeError::NotConverged(Box::new(SolveDiagnostics {
            sweeps_used: history.len(),
            residual_history: history,
            converged: false,
        })));
    }

    let back = backward(&lb);
    let fwd = forward(&la);
    let marginals: Vec<Vec<f64>> = (0..=horizon)
        .map(|k| normalize_log(&add(&add(&fwd[k], &back[k]), &logw)))
        .collect();
    if marginals.iter().flatten().any(|v| !v.is_finite()) {
        return Err(BridgeError::Underflow("non-finite node marginal".into()));
    }
    Ok(DiscreteChainSolution {
        marginals,
        tv_history: history,
        converged,
    })
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn shift_max(a: &[f64]) -> Vec<f64> {
    let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    a.iter().map(|v| v - m).collect()
}

/// Mean and standard deviation of node marginal `k`.
pub fn moments_of(sol: &DiscreteChainSolution, g: &GridSpec, k: usize) -> Result<(f64, f64)> {
    let m = sol.marginals.get(k).ok_or(BridgeError::IndexOutOfRange {
        index: k,
        limit: sol.marginals.len(),
    })?;
    Ok(moments(m, g))
}

pub(crate) fn moments(masses: &[f64], g: &GridSpec) -> (f64, f64) {
    let xs = g.nodes();
    let mean: f64 = masses.iter().zip(&xs).map(|(p, x)| p * x).sum();
    let var: f64 = masses
        .iter()
        .zip(&xs)
        .map(|(p, x)| p * (x - mean).powi(2))
        .sum();
    (mean, var.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::Gaussian;
    use crate::problem::CostSchedule;
    use nalgebra::{DMatrix, DVector};

    fn one(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    fn gauss(m: f64, v: f64) -> Gaussian {
        Gaussian::new(one(m), DMatrix::from_element(1, 1, v)).unwrap()
    }

    fn single(masses: Vec<f64>) -> DiscreteChainSolution {
        DiscreteChainSolution {
            marginals: vec![masses],
            tv_history: vec![],
            converged: true,
        }
    }

    #[test]
    fn delta_moments() {
        let g = GridSpec::new(101, 0.0, 4.0).unwrap();
        let mut m = vec![0.0; 101];
        m[50] = 1.0; // node 2.0
        let (mean, std) = moments_of(&single(m), &g, 0).unwrap();
        assert!((mean - 2.0).abs() < 1e-14);
        assert!(std < 1e-7);
    }

    #[test]
    fn discretized_standard_normal() {
        let g = GridSpec::new(1601, -8.0, 8.0).unwrap();
        let m = g.discretize_log(|x| -0.5 * x * x);
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (mean, std) = moments_of(&single(m), &g, 0).unwrap();
        assert!(mean.abs() < 1e-6);
        assert!((std - 1.0).abs() < 1e-4);
    }

    #[test]
    fn uniform_segment() {
        let g = GridSpec::new(1001, -1.0, 2.0).unwrap();
        let m = g.discretize_log(|x| {
            if (0.0..=1.0).contains(&x) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        });
        let (mean, std) = moments_of(&single(m), &g, 0).unwrap();
        assert!((mean - 0.5).abs() < 1e-3);
        assert!((std - 1.0 / 12f64.sqrt()).abs() < 2e-3);
    }

    #[test]
    fn index_out_of_range() {
        let g = GridSpec::new(101, 0.0, 1.0).unwrap();
        assert!(matches!(
            moments_of(&single(vec![0.01; 101]), &g, 1),
            Err(BridgeError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn grid_spec_rejects_bad_input() {
        assert!(GridSpec::new(50, 0.0, 1.0).is_err());
        assert!(GridSpec::new(101, 1.0, 1.0).is_err());
    }

    #[test]
    fn symmetric_chain_has_symmetric_marginals() {
        let s = Scenario::new(
            CostSchedule::constant(1, 4, 1.0, 0.0, 0.5),
            gauss(0.0, 1.0),
            gauss(0.0, 1.0),
        );
        let g = GridSpec::new(401, -8.0, 8.0).unwrap();
        let sol = solve_grid_1d(&s, &g, 500, 1e-10).unwrap();
        for m in &sol.marginals {
            let rev: Vec<f64> = m.iter().rev().copied().collect();
            assert!(total_variation(m, &rev) <= 1e-8);
            assert!((m.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn static_coupling_matches_endpoints() {
        let s = Scenario::new(
            CostSchedule::constant(1, 1, 1.0, 0.0, 0.3),
            gauss(-1.0, 0.5),
            gauss(1.5, 0.3),
        );
        let g = GridSpec::new(801, -8.0, 8.0).unwrap();
        let tol = 1e-9;
        let sol = solve_grid_1d(&s, &g, 2000, tol).unwrap();
        let t0 = g.discretize_log(|x| -(x + 1.0).powi(2) / (2.0 * 0.5));
        let tk = g.discretize_log(|x| -(x - 1.5).powi(2) / (2.0 * 0.3));
        assert!(total_variation(&sol.marginals[0], &t0) <= tol);
        assert!(total_variation(&sol.marginals[1], &tk) <= tol);
    }

    #[test]
    fn tv_history_is_monotone() {
        let mut cost = CostSchedule::constant(1, 6, 2.0, 0.2, 0.1);
        cost.waypoints = vec![one(0.5); 6];
        let s = Scenario::new(cost, gauss(-1.0, 0.2), gauss(1.0, 0.1));
        let g = GridSpec::new(401, -5.0, 5.0).unwrap();
        let sol = solve_grid_1d(&s, &g, 500, 1e-11).unwrap();
        for w in sol.tv_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-15, "{:?}", w);
        }
    }

    #[test]
    fn cold_chain_stays_finite() {
        let s = Scenario::new(
            CostSchedule::constant(1, 5, 1.0, 0.0, 1e-3),
            gauss(-2.0, 0.01),
            gauss(2.0, 0.02),
        );
        let g = GridSpec::new(201, -8.0, 8.0).unwrap();
        // coarse grid: the kernel is narrower than the spacing
        match solve_grid_1d(&s, &g, 50, 1e-6) {
            Ok(sol) => assert!(sol.marginals.iter().flatten().all(|v| v.is_finite())),
            Err(BridgeError::NotConverged(_)) => {}
            Err(e) => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_two_dimensions() {
        let s = Scenario::new(
            CostSchedule::constant(2, 2, 1.0, 0.0, 1.0),
            Gaussian::standard(2),
            Gaussian::standard(2),
        );
        let g = GridSpec::new(101, -1.0, 1.0).unwrap();
        assert!(matches!(
            solve_grid_1d(&s, &g, 10, 1e-6),
            Err(BridgeError::DimensionNotSupported(2))
        ));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let s = Scenario::new(
            CostSchedule::constant(1, 3, 2.0, 0.0, 0.2),
            gauss(-1.0, 0.3),
            gauss(1.0, 0.2),
        );
        let g = GridSpec::new(301, -6.0, 6.0).unwrap();
        let a = solve_grid_1d_with(&s, &g, 200, 1e-9, Execution::Serial).unwrap();
        let b = solve_grid_1d_with(&s, &g, 200, 1e-9, Execution::Parallel).unwrap();
        assert_eq!(a.marginals, b.marginals);
    }
}
