//! Dense SPD factorization and small symmetric-matrix helpers.
//!
//! Every inverse in the crate goes through [`SpdFactor`]; nothing inverts a
//! matrix elementwise or by cofactors.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{BridgeError, Location, Result};

/// Eigenvalue floor used by every SPD check.
pub const SPD_EIGEN_FLOOR: f64 = 1e-12;

/// Cholesky factorization of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    /// Factor `m`. Only the symmetric part of `m` is used.
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(BridgeError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let sym = symmetrize(m);
        match Cholesky::new(sym.clone()) {
            Some(chol) => Ok(Self { chol }),
            None => Err(BridgeError::NotSpd {
                min_eigenvalue: min_eigenvalue(&sym),
                at: Location::default(),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(v)
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// Symmetric inverse.
    pub fn inverse(&self) -> DMatrix<f64> {
        symmetrize(&self.chol.inverse())
    }

    pub fn log_det(&self) -> f64 {
        self.chol.ln_determinant()
    }

    /// Lower-triangular `L` with `L Lᵀ = m`.
    pub fn lower_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }
}

/// `(M + Mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return f64::NAN;
    }
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Largest entrywise asymmetry `max |m - mᵀ|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// Symmetry within `1e-12 · (1 + max|m|)`.
pub fn is_symmetric(m: &DMatrix<f64>) -> bool {
    m.is_square() && asymmetry(m) <= 1e-12 * (1.0 + m.amax())
}

/// Symmetric with minimum eigenvalue above [`SPD_EIGEN_FLOOR`].
pub fn check_spd(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(BridgeError::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let lam = min_eigenvalue(m);
    if !is_symmetric(m) || lam.is_nan() || lam <= SPD_EIGEN_FLOOR {
        return Err(BridgeError::NotSpd {
            min_eigenvalue: lam,
            at: Location::default(),
        });
    }
    Ok(())
}

/// Symmetric square root of an SPD matrix through its eigendecomposition.
pub fn spd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose()
}
