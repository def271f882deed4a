//! The optimal Gauss-Markov process: transition kernels, marginal rollout,
//! trajectory sampling and path densities.
//!
//! The transition is `x_{k+1} | x_k ~ N(G_k x_k + β_k, S_k⁻¹)` with
//! `S_k = R_k/ε + P_{k+1}`, `G_k = S_k⁻¹ R_k/ε` and `β_k = S_k⁻¹ P_{k+1} α_{k+1}`,
//! where `(P, α)` are the backward potentials of the converged solve.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{BridgeError, Result};
use crate::gaussian::{log_normal, Gaussian};
use crate::par::{map_indices, Execution};
use crate::problem::Scenario;
use crate::solver::{solve, PotentialSequence, SolveDiagnostics, SolvedPotentials};
use crate::spd::{symmetrize, SpdFactor};

#[derive(Debug, Clone)]
pub struct KernelStep {
    noise_precision: DMatrix<f64>,
    gain: DMatrix<f64>,
    drift: DVector<f64>,
    noise_cov: DMatrix<f64>,
    noise_factor: SpdFactor,
}

impl KernelStep {
    /// Build a step from its parameters; `noise_precision` must be SPD.
    pub fn new(
        noise_precision: DMatrix<f64>,
        gain: DMatrix<f64>,
        drift: DVector<f64>,
    ) -> Result<Self> {
        let noise_precision = symmetrize(&noise_precision);
        let noise_cov = SpdFactor::new(&noise_precision)?.inverse();
        let noise_factor = SpdFactor::new(&noise_cov)?;
        Ok(Self {
            noise_precision,
            gain,
            drift,
            noise_cov,
            noise_factor,
        })
    }

    /// `S_k`.
    pub fn noise_precision(&self) -> &DMatrix<f64> {
        &self.noise_precision
    }

    /// `G_k`.
    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    /// `β_k`.
    pub fn drift(&self) -> &DVector<f64> {
        &self.drift
    }

    /// `S_k⁻¹`.
    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    /// Lower Cholesky factor of `S_k⁻¹`.
    pub fn noise_lower(&self) -> DMatrix<f64> {
        self.noise_factor.lower_factor()
    }

    pub fn mean_from(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.gain * x + &self.drift
    }

    pub fn log_density(&self, from: &DVector<f64>, to: &DVector<f64>) -> f64 {
        log_normal(to, &self.mean_from(from), &self.noise_factor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalPath {
    pub items: Vec<Gaussian>,
}

/// Transition kernels from the backward potentials of a converged solve.
pub fn kernels(s: &Scenario, final_backward: &PotentialSequence) -> Result<Vec<KernelStep>> {
    let horizon = s.horizon();
    if final_backward.len() != horizon + 1 {
        return Err(BridgeError::LengthMismatch {
            expected: horizon + 1,
            found: final_backward.len(),
        });
    }
    let eps = s.cost.epsilon;
    (0..horizon)
        .map(|k| {
            let next = &final_backward.items[k + 1];
            let r_eps = &s.cost.kinetic[k] / eps;
            let s_k = symmetrize(&(&r_eps + next.precision()));
            let fac = SpdFactor::new(&s_k).map_err(|e| e.located(None, Some(k)))?;
            let gain = fac.solve_matrix(&r_eps);
            let drift = fac.solve(&(next.precision() * next.drift()));
            KernelStep::new(s_k, gain, drift).map_err(|e| e.located(None, Some(k)))
        })
        .collect()
}

/// Marginal moments along the bridge, seeded with `p0`.
pub fn rollout(s: &Scenario, ks: &[KernelStep]) -> MarginalPath {
    let mut items = Vec::with_capacity(ks.len() + 1);
    items.push(s.p0().clone());
    for step in ks {
        let cur = items.last().expect("non-empty");
        let mean = step.mean_from(cur.mean());
        let cov =
            symmetrize(&(step.gain() * cur.cov() * step.gain().transpose() + step.noise_cov()));
        items.push(Gaussian::from_parts(mean, cov));
    }
    MarginalPath { items }
}

/// Sampled trajectory: `K+1` points.
pub type Path = Vec<DVector<f64>>;

/// Trajectory sampler over a fixed kernel sequence.
///
/// Path `i` uses `ChaCha8Rng::seed_from_u64(seed)` moved to stream `i`, so
/// every path has its own reproducible random stream regardless of which
/// thread draws it.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    p0_mean: DVector<f64>,
    p0_lower: DMatrix<f64>,
    kernels: &'a [KernelStep],
    lowers: Vec<DMatrix<f64>>,
    noiseless: bool,
    execution: Execution,
}

impl<'a> Sampler<'a> {
    pub fn new(s: &Scenario, kernels: &'a [KernelStep]) -> Result<Self> {
        let p0_lower = SpdFactor::new(s.p0().cov())?.lower_factor();
        Ok(Self {
            p0_mean: s.p0().mean().clone(),
            p0_lower,
            kernels,
            lowers: kernels.iter().map(KernelStep::noise_lower).collect(),
            noiseless: false,
            execution: Execution::default(),
        })
    }

    /// Replace every Gaussian draw by zero; paths then follow the mean.
    pub fn noiseless(mut self, on: bool) -> Self {
        self.noiseless = on;
        self
    }

    pub fn execution(mut self, exec: Execution) -> Self {
        self.execution = exec;
        self
    }

    pub fn path(&self, seed: u64, index: u64) -> Path {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let d = self.p0_mean.len();
        let noiseless = self.noiseless;
        let mut draw = |lower: &DMatrix<f64>| -> DVector<f64> {
            let z = DVector::from_iterator(
                d,
                (0..d).map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    if noiseless {
                        0.0
                    } else {
                        v
                    }
                }),
            );
            lower * z
        };
        let mut out = Vec::with_capacity(self.kernels.len() + 1);
        out.push(&self.p0_mean + draw(&self.p0_lower));
        for (step, lower) in self.kernels.iter().zip(&self.lowers) {
            let next = step.mean_from(out.last().expect("non-empty")) + draw(lower);
            out.push(next);
        }
        out
    }

    pub fn sample(&self, n_paths: usize, seed: u64) -> Vec<Path> {
        map_indices(n_paths, self.execution, |i| self.path(seed, i as u64))
    }
}

/// `n_paths` trajectories, bit-identical for equal seeds.
pub fn sample_paths(
    s: &Scenario,
    ks: &[KernelStep],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Path>> {
    Ok(Sampler::new(s, ks)?.sample(n_paths, seed))
}

/// `log p0(x_0) + Σ_k log N(x_{k+1} | G_k x_k + β_k, S_k⁻¹)`.
pub fn path_log_density(s: &Scenario, ks: &[KernelStep], path: &[DVector<f64>]) -> Result<f64> {
    if path.len() != ks.len() + 1 {
        return Err(BridgeError::LengthMismatch {
            expected: ks.len() + 1,
            found: path.len(),
        });
    }
    let d = s.dim();
    if let Some(bad) = path.iter().find(|x| x.len() != d) {
        return Err(BridgeError::DimensionMismatch {
            expected: d,
            found: bad.len(),
        });
    }
    let mut total = s.p0().log_density(&path[0])?;
    for (k, step) in ks.iter().enumerate() {
        total += step.log_density(&path[k], &path[k + 1]);
    }
    Ok(total)
}

/// Everything a converged solve produces.
#[derive(Debug, Clone)]
pub struct BridgeSolution {
    pub potentials: SolvedPotentials,
    pub kernels: Vec<KernelStep>,
    pub marginals: MarginalPath,
}

impl BridgeSolution {
    pub fn diagnostics(&self) -> &SolveDiagnostics {
        &self.potentials.diagnostics
    }

    /// Build kernels and marginals from solved potentials, converged or not.
    pub fn from_potentials(s: &Scenario, potentials: SolvedPotentials) -> Result<Self> {
        let ks = kernels(s, &potentials.final_backward)?;
        let marginals = rollout(s, &ks);
        Ok(Self {
            potentials,
            kernels: ks,
            marginals,
        })
    }
}

/// Solve, then synthesize kernels and marginals.
pub fn synthesize(s: &Scenario) -> Result<BridgeSolution> {
    BridgeSolution::from_potentials(s, solve(s)?)
}
