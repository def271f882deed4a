#![allow(dead_code)]

use lqr_bridge::{CostSchedule, Gaussian, Scenario, SolverSettings};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_vector(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| scale * normal(rng))
}

pub fn random_rotation(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| normal(rng));
    m.qr().q()
}

/// Matrix with eigenvalues drawn log-uniformly from `[lo, hi]`.
pub fn random_spd(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let u = random_rotation(rng, d);
    let eig = DVector::from_fn(d, |_, _| {
        (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
    });
    let m = &u * DMatrix::from_diagonal(&eig) * u.transpose();
    (&m + m.transpose()) * 0.5
}

/// PSD matrix that may be singular.
pub fn random_psd(rng: &mut ChaCha8Rng, d: usize, hi: f64) -> DMatrix<f64> {
    let u = random_rotation(rng, d);
    let eig = DVector::from_fn(d, |_, _| {
        if rng.random::<f64>() < 0.3 {
            0.0
        } else {
            hi * rng.random::<f64>()
        }
    });
    let m = &u * DMatrix::from_diagonal(&eig) * u.transpose();
    (&m + m.transpose()) * 0.5
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.max()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.min()
}

pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn rel_vector(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

#[derive(Debug, Clone)]
pub struct Shape {
    pub dim: usize,
    pub horizon: usize,
    pub with_potential: bool,
}

/// Random scenario whose marginals are narrow enough that every boundary
/// division stays dominated: `Σ₀ ≺ ε (Q₀+R₀)⁻¹` and `Σ_K ≺ ε R_{K-1}⁻¹`.
pub fn random_scenario(seed: u64, shape: &Shape) -> Scenario {
    let mut rng = rng(seed);
    let d = shape.dim;
    let horizon = shape.horizon;
    let eps = (1e-3f64.ln() * rng.random::<f64>()).exp();
    let mut cost = CostSchedule::constant(d, horizon, 1.0, 0.0, eps);
    for k in 0..horizon {
        cost.kinetic[k] = random_spd(&mut rng, d, 0.5, 20.0);
        if shape.with_potential && rng.random::<f64>() < 0.5 {
            cost.potential[k] = random_psd(&mut rng, d, 2.0);
            cost.waypoints[k] = random_vector(&mut rng, d, 2.0);
        }
    }
    let cap0 = 0.5 * eps / max_eigenvalue(&(&cost.potential[0] + &cost.kinetic[0]));
    let cap_k = 0.5 * eps / max_eigenvalue(&cost.kinetic[horizon - 1]);
    let cov0 = random_spd(&mut rng, d, 0.05 * cap0, cap0);
    let cov_k = random_spd(&mut rng, d, 0.05 * cap_k, cap_k);
    let p0 = Gaussian::new(random_vector(&mut rng, d, 1.0), cov0).expect("spd");
    let pk = Gaussian::new(random_vector(&mut rng, d, 1.0), cov_k).expect("spd");
    Scenario::new(cost, p0, pk)
}

pub fn tight(s: Scenario) -> Scenario {
    s.with_solver(SolverSettings {
        tol: 1e-12,
        max_sweeps: 5000,
    })
}

pub fn scalar_scenario(
    horizon: usize,
    r: f64,
    eps: f64,
    p0: (f64, f64),
    pk: (f64, f64),
) -> Scenario {
    Scenario::new(
        CostSchedule::constant(1, horizon, r, 0.0, eps),
        Gaussian::new(
            DVector::from_element(1, p0.0),
            DMatrix::from_element(1, 1, p0.1),
        )
        .unwrap(),
        Gaussian::new(
            DVector::from_element(1, pk.0),
            DMatrix::from_element(1, 1, pk.1),
        )
        .unwrap(),
    )
}
