//! Moment-form and information-form Gaussian arithmetic.
//!
//! A [`QuadraticPotential`] stores `(precision, drift)`; the density it
//! stands for is `N(drift, precision⁻¹)`. A [`Gaussian`] stores
//! `(mean, cov)`. Every matrix result is re-symmetrized before it is
//! returned.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{BridgeError, Location, Result};
use crate::spd::{check_spd, min_eigenvalue, symmetrize, SpdFactor, SPD_EIGEN_FLOOR};

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl Gaussian {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        check_dims(mean.len(), &cov)?;
        check_spd(&cov)?;
        Ok(Self { mean, cov })
    }

    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    /// Skip the invariant checks; [`crate::Scenario::validate`] reports
    /// them later with field paths.
    pub fn new_unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov }
    }

    pub fn standard(dim: usize) -> Self {
        Self::from_parts(DVector::zeros(dim), DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// The same density written as a potential: precision `cov⁻¹`, drift `mean`.
    pub fn to_potential(&self) -> Result<QuadraticPotential> {
        let f = SpdFactor::new(&self.cov)?;
        Ok(QuadraticPotential::from_parts(
            f.inverse(),
            self.mean.clone(),
        ))
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(BridgeError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let f = SpdFactor::new(&self.cov)?;
        Ok(log_normal(x, &self.mean, &f))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticPotential {
    precision: DMatrix<f64>,
    drift: DVector<f64>,
}

impl QuadraticPotential {
    pub fn new(precision: DMatrix<f64>, drift: DVector<f64>) -> Result<Self> {
        check_dims(drift.len(), &precision)?;
        check_spd(&precision)?;
        Ok(Self { precision, drift })
    }

    pub(crate) fn from_parts(precision: DMatrix<f64>, drift: DVector<f64>) -> Self {
        Self { precision, drift }
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn drift(&self) -> &DVector<f64> {
        &self.drift
    }

    /// Normalized density `N(drift, precision⁻¹)`.
    pub fn to_gaussian(&self) -> Result<Gaussian> {
        let f = SpdFactor::new(&self.precision)?;
        Ok(Gaussian::from_parts(self.drift.clone(), f.inverse()))
    }

    /// Natural parameters `(precision, precision · drift)`.
    pub fn natural(&self) -> (DMatrix<f64>, DVector<f64>) {
        (self.precision.clone(), &self.precision * &self.drift)
    }
}

fn check_dims(n: usize, m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != n {
        return Err(BridgeError::DimensionMismatch {
            expected: n,
            found: m.nrows(),
        });
    }
    if m.ncols() != n {
        return Err(BridgeError::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    Ok(())
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(BridgeError::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// `log N(x | mean, C)` with `C` given by its factorization.
pub(crate) fn log_normal(x: &DVector<f64>, mean: &DVector<f64>, cov: &SpdFactor) -> f64 {
    let r = x - mean;
    let maha = r.dot(&cov.solve(&r));
    -0.5 * (x.len() as f64 * (2.0 * PI).ln() + cov.log_det() + maha)
}

/// Product of two Gaussian densities.
///
/// Returns the normalized product and `log Z` with
/// `Z = N(a.drift | b.drift, a.precision⁻¹ + b.precision⁻¹)`.
pub fn product(
    a: &QuadraticPotential,
    b: &QuadraticPotential,
) -> Result<(QuadraticPotential, f64)> {
    same_dim(a.dim(), b.dim())?;
    let precision = symmetrize(&(&a.precision + &b.precision));
    let f = SpdFactor::new(&precision)?;
    let rhs = &a.precision * &a.drift + &b.precision * &b.drift;
    let drift = f.solve(&rhs);

    let cov_a = SpdFactor::new(&a.precision)?.inverse();
    let cov_b = SpdFactor::new(&b.precision)?.inverse();
    let joint = SpdFactor::new(&(cov_a + cov_b))?;
    let log_z = log_normal(&a.drift, &b.drift, &joint);

    Ok((QuadraticPotential::from_parts(precision, drift), log_z))
}

/// `∫ N(x | A z + b, noise) N(z | g) dz = N(A μ + b, noise + A Σ Aᵀ)`.
pub fn convolve(
    g: &Gaussian,
    a_matrix: &DMatrix<f64>,
    b_vector: &DVector<f64>,
    noise_cov: &DMatrix<f64>,
) -> Result<Gaussian> {
    let d = g.dim();
    check_dims(d, a_matrix)?;
    check_dims(d, noise_cov)?;
    same_dim(d, b_vector.len())?;
    // positive definiteness only; the 1e-12 floor would exclude the vanishing-noise limit
    SpdFactor::new(noise_cov)?;
    let mean = a_matrix * &g.mean + b_vector;
    let cov = symmetrize(&(noise_cov + a_matrix * &g.cov * a_matrix.transpose()));
    Ok(Gaussian::from_parts(mean, cov))
}

/// Ratio of a Gaussian density by a Gaussian potential.
///
/// Fails with [`BridgeError::NotDominated`] unless `numerator.cov⁻¹ -
/// denominator.precision` has all eigenvalues above `1e-12`.
pub fn divide(
    numerator: &Gaussian,
    denominator: &QuadraticPotential,
) -> Result<QuadraticPotential> {
    same_dim(numerator.dim(), denominator.dim())?;
    let info = SpdFactor::new(&numerator.cov)?.inverse();
    let precision = symmetrize(&(&info - &denominator.precision));
    let lam = min_eigenvalue(&precision);
    if lam.is_nan() || lam <= SPD_EIGEN_FLOOR {
        return Err(BridgeError::NotDominated {
            min_eigenvalue: lam,
            at: Location::default(),
        });
    }
    let f = SpdFactor::new(&precision)?;
    let rhs = &info * &numerator.mean - &denominator.precision * &denominator.drift;
    Ok(QuadraticPotential::from_parts(precision, f.solve(&rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pot1(p: f64, a: f64) -> QuadraticPotential {
        QuadraticPotential::new(DMatrix::from_element(1, 1, p), DVector::from_element(1, a))
            .unwrap()
    }

    fn gauss1(m: f64, v: f64) -> Gaussian {
        Gaussian::new(DVector::from_element(1, m), DMatrix::from_element(1, 1, v)).unwrap()
    }

    fn npdf(x: f64, m: f64, v: f64) -> f64 {
        (-(x - m).powi(2) / (2.0 * v)).exp() / (2.0 * PI * v).sqrt()
    }

    #[test]
    fn product_of_standard_normals() {
        let (p, log_z) = product(&pot1(1.0, 0.0), &pot1(1.0, 0.0)).unwrap();
        assert_eq!(p.precision()[(0, 0)], 2.0);
        assert_eq!(p.drift()[0], 0.0);
        assert_relative_eq!(log_z, -0.5 * (4.0 * PI).ln(), epsilon = 1e-14);
    }

    #[test]
    fn product_equal_precisions_average() {
        let (p, _) = product(&pot1(1.0, 1.0), &pot1(1.0, 3.0)).unwrap();
        assert_eq!(p.precision()[(0, 0)], 2.0);
        assert_relative_eq!(p.drift()[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn product_matches_pointwise_grid() {
        let (a, b) = (pot1(2.0, 0.0), pot1(1.0, 3.0));
        let (p, log_z) = product(&a, &b).unwrap();
        let (pp, pm) = (p.precision()[(0, 0)], p.drift()[0]);
        let z = log_z.exp();
        for i in 0..1001 {
            let x = -6.0 + 12.0 * i as f64 / 1000.0;
            let lhs = npdf(x, 0.0, 0.5) * npdf(x, 3.0, 1.0);
            let rhs = z * npdf(x, pm, 1.0 / pp);
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(f64::MIN_POSITIVE),
                "x={x}"
            );
        }
    }

    #[test]
    fn product_dimension_mismatch() {
        let b = QuadraticPotential::new(DMatrix::identity(2, 2), DVector::zeros(2)).unwrap();
        assert!(matches!(
            product(&pot1(1.0, 0.0), &b),
            Err(BridgeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn convolve_identity_case() {
        let g = Gaussian::standard(2);
        let out = convolve(
            &g,
            &DMatrix::identity(2, 2),
            &DVector::zeros(2),
            &DMatrix::identity(2, 2),
        )
        .unwrap();
        assert_eq!(out.mean(), &DVector::zeros(2));
        assert_eq!(out.cov(), &(DMatrix::identity(2, 2) * 2.0));
    }

    #[test]
    fn convolve_scalar_substitution() {
        let out = convolve(
            &gauss1(1.0, 3.0),
            &DMatrix::from_element(1, 1, 2.0),
            &DVector::from_element(1, 1.0),
            &DMatrix::from_element(1, 1, 4.0),
        )
        .unwrap();
        assert_eq!(out.mean()[0], 3.0);
        assert_eq!(out.cov()[(0, 0)], 16.0);
    }

    #[test]
    fn convolve_matches_quadrature() {
        let out = convolve(
            &gauss1(0.0, 1.0),
            &DMatrix::identity(1, 1),
            &DVector::zeros(1),
            &DMatrix::identity(1, 1),
        )
        .unwrap();
        let (m, v) = (out.mean()[0], out.cov()[(0, 0)]);
        // trapezoid over z in [-12, 12]
        let n = 4801;
        let h = 24.0 / (n - 1) as f64;
        for &x in &[-3.0, -1.0, 0.0, 0.5, 2.0] {
            let mut s = 0.0;
            for j in 0..n {
                let z = -12.0 + h * j as f64;
                let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                s += w * npdf(x, z, 1.0) * npdf(z, 0.0, 1.0);
            }
            s *= h;
            let expect = npdf(x, m, v);
            assert!(
                ((s - expect) / expect).abs() <= 1e-8,
                "x={x}: {s} vs {expect}"
            );
        }
    }

    #[test]
    fn convolve_vanishing_noise_returns_input() {
        let g = Gaussian::new(
            DVector::from_vec(vec![0.3, -1.2]),
            DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.7]),
        )
        .unwrap();
        let out = convolve(
            &g,
            &DMatrix::identity(2, 2),
            &DVector::zeros(2),
            &(DMatrix::identity(2, 2) * 1e-14),
        )
        .unwrap();
        assert!((out.mean() - g.mean()).amax() <= 1e-12);
        assert!((out.cov() - g.cov()).amax() <= 1e-12);
    }

    #[test]
    fn divide_zero_drifts() {
        let q = divide(&gauss1(0.0, 1.0), &pot1(0.5, 0.0)).unwrap();
        assert_relative_eq!(q.precision()[(0, 0)], 0.5, epsilon = 1e-15);
        assert_eq!(q.drift()[0], 0.0);
    }

    #[test]
    fn divide_not_dominated() {
        match divide(&gauss1(0.0, 1.0), &pot1(2.0, 0.0)) {
            Err(BridgeError::NotDominated { min_eigenvalue, .. }) => {
                assert_relative_eq!(min_eigenvalue, -1.0, epsilon = 1e-12)
            }
            other => panic!("expected NotDominated, got {other:?}"),
        }
    }

    #[test]
    fn divide_round_trips_through_product() {
        let den = pot1(1.0, -1.0);
        let q = divide(&gauss1(1.0, 0.5), &den).unwrap();
        assert_relative_eq!(q.precision()[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(q.drift()[0], 3.0, epsilon = 1e-14);
        let (back, _) = product(&q, &den).unwrap();
        let g = back.to_gaussian().unwrap();
        assert_relative_eq!(g.mean()[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(g.cov()[(0, 0)], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn constructors_reject_invalid() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Gaussian::new(DVector::zeros(2), asym).is_err());
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(QuadraticPotential::new(neg, DVector::zeros(2)).is_err());
        assert!(matches!(
            Gaussian::new(DVector::zeros(3), DMatrix::identity(2, 2)),
            Err(BridgeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn log_density_standard() {
        let g = Gaussian::standard(1);
        let v = g.log_density(&DVector::from_element(1, 1.0)).unwrap();
        assert_relative_eq!(v, npdf(1.0, 0.0, 1.0).ln(), epsilon = 1e-14);
    }
}
