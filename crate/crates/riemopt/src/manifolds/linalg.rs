//! Symmetric matrix functions through an eigendecomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues below this are clamped before `log`, `sqrt` and inverses.
pub const EIGEN_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct SymEig {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    /// `Q diag(f(lambda)) Q^T`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let q = &self.vectors;
        let mut scaled = q.clone();
        for (j, lam) in self.values.iter().enumerate() {
            let s = f(*lam);
            scaled.column_mut(j).scale_mut(s);
        }
        symmetrize(&(scaled * q.transpose()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.min()
    }
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Largest entry of `A - A^T` in absolute value.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    (a - a.transpose()).amax()
}

/// Eigendecomposition of the symmetric part of `a`.
pub fn sym_eig(a: &DMatrix<f64>) -> SymEig {
    let e = SymmetricEigen::new(symmetrize(a));
    SymEig {
        values: e.eigenvalues,
        vectors: e.eigenvectors,
    }
}

pub fn expm_sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_eig(a).map(f64::exp)
}

fn require_pd(e: &SymEig) -> Result<()> {
    let min = e.min_value();
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            min_eigenvalue: min,
        });
    }
    Ok(())
}

pub fn logm_spd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = sym_eig(a);
    require_pd(&e)?;
    Ok(e.map(|l| l.max(EIGEN_FLOOR).ln()))
}

pub fn sqrtm_spd(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = sym_eig(a);
    require_pd(&e)?;
    Ok(e.map(|l| l.max(EIGEN_FLOOR).sqrt()))
}

/// Divided difference of `ln` at `(a, b)`, i.e. `(ln a - ln b) / (a - b)`.
pub(crate) fn log_divided_difference(a: f64, b: f64) -> f64 {
    let r = (a - b) / b;
    if r.abs() < 1e-4 {
        (1.0 - r * (0.5 - r * (1.0 / 3.0 - r / 4.0))) / b
    } else {
        r.ln_1p() / (r * b)
    }
}
