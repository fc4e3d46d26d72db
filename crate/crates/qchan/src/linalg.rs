//! Dense complex linear algebra for small matrices (d <= ~16).
//!
//! Everything downstream (channels, divergences, optimizers) is built on
//! Hermitian eigendecompositions of matrices of this size, so the tolerances
//! here are fixed absolute-relative hybrids: reconstruction 1e-10, Hermiticity
//! 1e-12, both scaled by the max-entry magnitude.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QchanError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-10;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Real eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the corresponding eigenvectors.
    pub eigenvectors: CMat,
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Max-norm deviation from Hermitian symmetry.
pub fn hermiticity_deviation(m: &CMat) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn check_hermitian(m: &CMat) -> Result<()> {
    let dev = hermiticity_deviation(m);
    if dev > HERMITICITY_TOL * (1.0 + max_abs(m)) {
        return Err(QchanError::NonHermitian(dev));
    }
    Ok(())
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub fn eig_hermitian(m: &CMat) -> Result<Spectrum> {
    check_hermitian(m)?;
    let d = m.nrows();
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMat::zeros(d, d);
    for (k, &i) in order.iter().enumerate() {
        eigenvectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

impl Spectrum {
    /// Rebuild U diag(g(lambda)) U^dagger.
    pub fn apply_fn(&self, g: impl Fn(f64) -> f64) -> CMat {
        let d = self.eigenvalues.len();
        let diag = CMat::from_diagonal(&CVec::from_iterator(
            d,
            self.eigenvalues.iter().map(|&l| Complex64::new(g(l), 0.0)),
        ));
        &self.eigenvectors * diag * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMat {
        self.apply_fn(|l| l)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of a (da*db) x (da*db) matrix over the factor not kept.
pub fn partial_trace(m: &CMat, da: usize, db: usize, keep: Keep) -> Result<CMat> {
    if m.nrows() != da * db || m.ncols() != da * db {
        return Err(QchanError::DimMismatch(format!(
            "partial_trace expects {0}x{0}, got {1}x{2}",
            da * db,
            m.nrows(),
            m.ncols()
        )));
    }
    match keep {
        Keep::First => {
            let mut out = CMat::zeros(da, da);
            for i in 0..da {
                for j in 0..da {
                    let mut s = Complex64::default();
                    for k in 0..db {
                        s += m[(i * db + k, j * db + k)];
                    }
                    out[(i, j)] = s;
                }
            }
            Ok(out)
        }
        Keep::Second => {
            let mut out = CMat::zeros(db, db);
            for i in 0..db {
                for j in 0..db {
                    let mut s = Complex64::default();
                    for k in 0..da {
                        s += m[(k * db + i, k * db + j)];
                    }
                    out[(i, j)] = s;
                }
            }
            Ok(out)
        }
    }
}

/// PSD test: min eigenvalue >= -tol * max(1, max-entry magnitude).
pub fn is_psd(m: &CMat, tol: f64) -> bool {
    match eig_hermitian(m) {
        Ok(spec) => spec.min_eigenvalue() >= -tol * 1.0_f64.max(max_abs(m)),
        Err(_) => false,
    }
}

pub fn trace(m: &CMat) -> Complex64 {
    m.trace()
}

/// Frobenius (Schatten-2) norm.
pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
