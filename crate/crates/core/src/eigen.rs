//! Dense Hermitian eigensolver with a checked residual contract.
//!
//! Backed by nalgebra's Householder tridiagonalization + implicit QR.
//! Every decomposition is verified against
//! `||H v - lambda v|| <= RESIDUAL_TOL * ||H||_F` before it is returned.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative residual bound (against the Frobenius norm) for each eigenpair.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Relative Hermiticity check applied to solver input.
pub const HERMITICITY_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000;

/// Square complex matrix that equals its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
}

impl HermitianMatrix {
    /// Wraps `data` after checking Hermiticity to `HERMITICITY_TOL * max|H_ij|`.
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::Validation(format!(
                "matrix is {}x{}, not square",
                data.nrows(),
                data.ncols()
            )));
        }
        let deviation = hermiticity_deviation(&data);
        let scale = max_abs(&data).max(f64::MIN_POSITIVE);
        if deviation > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(HermitianMatrix { data })
    }

    /// `(A + A^dagger) / 2`; the result is Hermitian bit for bit.
    pub fn hermitize(a: DMatrix<Complex64>) -> Self {
        let dim = a.nrows();
        assert_eq!(dim, a.ncols(), "hermitize needs a square matrix");
        let mut data = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            for i in j..dim {
                let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
                if i == j {
                    data[(i, i)] = Complex64::new(v.re, 0.0);
                } else {
                    data[(i, j)] = v;
                    data[(j, i)] = v.conj();
                }
            }
        }
        HermitianMatrix { data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut data = DMatrix::zeros(dim, dim);
        for (i, &d) in diag.iter().enumerate() {
            data[(i, i)] = Complex64::new(d, 0.0);
        }
        HermitianMatrix { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// Entry-wise complex conjugate (the `k -> -k` partner of a Bloch block).
    pub fn conj(&self) -> Self {
        HermitianMatrix {
            data: self.data.map(|z| z.conj()),
        }
    }

    pub fn add_scaled_identity(&mut self, shift: f64) {
        for i in 0..self.dim() {
            self.data[(i, i)].re += shift;
        }
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermiticity_deviation(m: &DMatrix<Complex64>) -> f64 {
    let dim = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..dim {
        for i in j..dim {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Eigenvalues in ascending order, optional eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<DMatrix<Complex64>>,
    /// Largest `||H v - lambda v||_2` observed, if vectors were computed.
    pub residual_bound: f64,
}

impl Spectrum {
    pub fn vector(&self, i: usize) -> Option<Vec<Complex64>> {
        self.eigenvectors
            .as_ref()
            .map(|v| v.column(i).iter().copied().collect())
    }
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending. The residual contract is checked even
/// when only eigenvalues are requested; a violation is reported as
/// `Error::Numerical`.
pub fn eigh(matrix: &HermitianMatrix, want_vectors: bool) -> Result<Spectrum> {
    let dim = matrix.dim();
    if dim == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            eigenvectors: want_vectors.then(|| DMatrix::zeros(0, 0)),
            residual_bound: 0.0,
        });
    }
    let a = matrix.as_matrix();
    let dev = hermiticity_deviation(a);
    if dev > HERMITICITY_TOL * max_abs(a).max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { deviation: dev });
    }

    let eig = a
        .clone()
        .try_symmetric_eigen(f64::EPSILON, MAX_SWEEPS)
        .ok_or_else(|| Error::Numerical(format!("no convergence for a {dim}x{dim} matrix")))?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);

    let norm = matrix.frobenius_norm();
    let hv = a * &vectors;
    let mut worst = 0.0f64;
    for (c, &lambda) in eigenvalues.iter().enumerate() {
        let r = (hv.column(c) - vectors.column(c) * Complex64::new(lambda, 0.0)).norm();
        worst = worst.max(r);
    }
    if worst > RESIDUAL_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!(
            "residual {worst:e} exceeds {RESIDUAL_TOL:e} * ||H||_F = {:e}",
            RESIDUAL_TOL * norm
        )));
    }

    Ok(Spectrum {
        eigenvalues,
        eigenvectors: want_vectors.then_some(vectors),
        residual_bound: worst,
    })
}

/// Eigenvalues of a matrix with real diagonal, complex sub-diagonal and a
/// complex corner pair.
///
/// `offdiag[i]` sits at `(i + 1, i)` and `corner` at `(m - 1, 0)`; the
/// conjugates fill the upper triangle. For `m == 2` the corner adds to the
/// single off-diagonal entry.
pub fn eigvals_real_tridiag_plus_corners(
    diag: &[f64],
    offdiag: &[Complex64],
    corner: Complex64,
) -> Result<Vec<f64>> {
    let m = diag.len();
    if m == 0 || offdiag.len() + 1 != m {
        return Err(Error::Validation(format!(
            "tridiagonal shape mismatch: {} diagonal, {} off-diagonal entries",
            m,
            offdiag.len()
        )));
    }
    if m == 1 {
        return Ok(vec![diag[0]]);
    }
    Ok(eigh(&tridiag_plus_corners(diag, offdiag, corner), false)?.eigenvalues)
}

/// Dense materialization used by [`eigvals_real_tridiag_plus_corners`].
pub fn tridiag_plus_corners(diag: &[f64], offdiag: &[Complex64], corner: Complex64) -> HermitianMatrix {
    let m = diag.len();
    let mut a = DMatrix::zeros(m, m);
    for (i, &d) in diag.iter().enumerate() {
        a[(i, i)] = Complex64::new(d, 0.0);
    }
    for (i, &z) in offdiag.iter().enumerate() {
        a[(i + 1, i)] += z;
        a[(i, i + 1)] += z.conj();
    }
    if m > 1 {
        a[(m - 1, 0)] += corner;
        a[(0, m - 1)] += corner.conj();
    }
    HermitianMatrix { data: a }
}
