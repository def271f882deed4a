//! Closed-form recursions against brute-force numerical integration.

mod common;

use lqr_bridge::grid_oracle::{moments_of, solve_grid_1d, GridSpec};
use lqr_bridge::*;
use nalgebra::{DMatrix, DVector};

const Q_EPS: f64 = 0.5;
const R_EPS: f64 = 2.0;
const X_STAR: f64 = 0.7;
const NODES: usize = 2001;
const SPAN: f64 = 8.0;

fn nodes() -> Vec<f64> {
    let h = 2.0 * SPAN / (NODES - 1) as f64;
    (0..NODES).map(|i| -SPAN + i as f64 * h).collect()
}

fn trapezoid(xs: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    let h = xs[1] - xs[0];
    (0..xs.len())
        .map(|i| {
            if i == 0 || i == xs.len() - 1 {
                0.5 * f(i)
            } else {
                f(i)
            }
        })
        .sum::<f64>()
        * h
}

/// Mean and variance of the normalized function `exp(log_f)` on the grid.
fn fit(xs: &[f64], log_f: &[f64]) -> (f64, f64) {
    let m = log_f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let f: Vec<f64> = log_f.iter().map(|v| (v - m).exp()).collect();
    let z = trapezoid(xs, |i| f[i]);
    let mean = trapezoid(xs, |i| f[i] * xs[i]) / z;
    let var = trapezoid(xs, |i| f[i] * (xs[i] - mean).powi(2)) / z;
    (mean, var)
}

fn log_loss(x: f64, y: f64) -> f64 {
    -0.5 * Q_EPS * (x - X_STAR).powi(2) - 0.5 * R_EPS * (y - x).powi(2)
}

fn scenario(horizon: usize) -> Scenario {
    let mut cost = CostSchedule::constant(1, horizon, R_EPS, Q_EPS, 1.0);
    cost.waypoints = vec![DVector::from_element(1, X_STAR); horizon];
    Scenario::new(cost, Gaussian::standard(1), Gaussian::standard(1))
}

fn pot(precision: f64, drift: f64) -> QuadraticPotential {
    QuadraticPotential::new(
        DMatrix::from_element(1, 1, precision),
        DVector::from_element(1, drift),
    )
    .unwrap()
}

fn integrate_backward(xs: &[f64], next: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let terms: Vec<f64> = xs
                .iter()
                .zip(next)
                .map(|(&y, &l)| log_loss(x, y) + l)
                .collect();
            let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            m + trapezoid(xs, |j| (terms[j] - m).exp()).ln()
        })
        .collect()
}

fn integrate_forward(xs: &[f64], cur: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&y| {
            let terms: Vec<f64> = xs
                .iter()
                .zip(cur)
                .map(|(&x, &l)| log_loss(x, y) + l)
                .collect();
            let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            m + trapezoid(xs, |j| (terms[j] - m).exp()).ln()
        })
        .collect()
}

#[test]
fn backward_sweep_matches_quadrature() {
    let horizon = 3;
    let s = scenario(horizon);
    let start = pot(1.5, 0.3);
    let seq = backward_sweep(&s, &start).unwrap();
    let xs = nodes();
    let mut log_phi: Vec<f64> = xs.iter().map(|&x| -0.75 * (x - 0.3).powi(2)).collect();
    for k in (0..horizon).rev() {
        log_phi = integrate_backward(&xs, &log_phi);
        let (mean, var) = fit(&xs, &log_phi);
        let p = &seq.items[k];
        assert!(
            (mean - p.drift()[0]).abs() < 1e-6,
            "k={k} mean {mean} vs {}",
            p.drift()[0]
        );
        assert!((1.0 / var - p.precision()[(0, 0)]).abs() < 1e-6, "k={k}");
    }
}

#[test]
fn forward_sweep_matches_quadrature() {
    let horizon = 3;
    let s = scenario(horizon);
    let start = pot(0.8, -0.4);
    let seq = forward_sweep(&s, &start).unwrap();
    let xs = nodes();
    let mut log_phi: Vec<f64> = xs.iter().map(|&x| -0.4 * (x + 0.4).powi(2)).collect();
    for k in 0..horizon {
        log_phi = integrate_forward(&xs, &log_phi);
        let (mean, var) = fit(&xs, &log_phi);
        let p = &seq.items[k + 1];
        assert!(
            (mean - p.drift()[0]).abs() < 1e-6,
            "k={k} mean {mean} vs {}",
            p.drift()[0]
        );
        assert!((1.0 / var - p.precision()[(0, 0)]).abs() < 1e-6, "k={k}");
    }
}

fn one_d(
    horizon: usize,
    r: f64,
    eps: f64,
    p0: (f64, f64),
    pk: (f64, f64),
    wps: &[(usize, f64, f64)],
) -> Scenario {
    let mut s = common::scalar_scenario(horizon, r, eps, p0, pk);
    for &(k, q, x) in wps {
        s.cost.potential[k] = DMatrix::from_element(1, 1, q);
        s.cost.waypoints[k] = DVector::from_element(1, x);
    }
    s
}

fn regression_set() -> Vec<(&'static str, Scenario)> {
    let constant_pull = {
        let wps: Vec<_> = (0..8).map(|k| (k, 0.5, 1.0)).collect();
        one_d(8, 1.0, 1.0, (0.0, 0.2), (2.0, 0.3), &wps)
    };
    vec![
        ("free", one_d(10, 2.0, 1.0, (0.0, 0.3), (2.0, 0.2), &[])),
        (
            "single waypoint",
            one_d(12, 4.0, 0.5, (0.0, 0.1), (1.0, 0.1), &[(6, 2.0, -1.0)]),
        ),
        ("constant pull", constant_pull),
        (
            "cool",
            one_d(10, 1.0, 0.1, (0.0, 0.05), (1.5, 0.02), &[(4, 0.5, 1.2)]),
        ),
        (
            "two waypoints",
            one_d(
                20,
                5.0,
                1.0,
                (0.0, 0.1),
                (0.5, 0.1),
                &[(5, 1.0, 2.0), (15, 1.0, -2.0)],
            ),
        ),
    ]
}

fn worst_gap(s: &Scenario, n_points: usize) -> (f64, f64) {
    let g = GridSpec::auto(s, n_points).unwrap();
    let grid = solve_grid_1d(s, &g, 50_000, 1e-10).unwrap();
    let sol = synthesize(s).unwrap();
    let mut worst = 0.0f64;
    for (k, m) in sol.marginals.items.iter().enumerate() {
        let (gm, gs) = moments_of(&grid, &g, k).unwrap();
        worst = worst
            .max((gm - m.mean()[0]).abs())
            .max((gs - m.cov()[(0, 0)].sqrt()).abs());
    }
    (worst, g.spacing())
}

#[test]
fn grid_oracle_agrees_with_closed_form() {
    for (name, s) in regression_set() {
        let (gap, h) = worst_gap(&s, 1601);
        let tol = (3.0 * h).max(1e-2);
        assert!(gap <= tol, "{name}: gap {gap:.3e} > {tol:.3e}");
    }
}

/// Marginals narrower than the coarse spacing, so discretization error
/// dominates the comparison.
#[test]
fn refining_the_grid_shrinks_the_gap() {
    let s = one_d(
        4,
        1.0,
        0.001,
        (0.0, 2.5e-5),
        (1.0, 2.5e-5),
        &[(2, 0.005, 0.8)],
    );
    let gaps: Vec<f64> = [101, 201, 401]
        .iter()
        .map(|&n| worst_gap(&s, n).0)
        .collect();
    assert!(gaps[0] > 1e-4, "coarse grid unexpectedly exact: {gaps:?}");
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
}

#[test]
fn grid_terminal_fit_is_monotone() {
    for (name, s) in regression_set() {
        let g = GridSpec::auto(&s, 801).unwrap();
        let grid = solve_grid_1d(&s, &g, 50_000, 1e-10).unwrap();
        for w in grid.tv_history.windows(2) {
            assert!(
                w[1] <= w[0] * (1.0 + 1e-9) + 1e-15,
                "{name}: {} -> {}",
                w[0],
                w[1]
            );
        }
    }
}
