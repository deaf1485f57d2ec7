//! Arnoldi decomposition with modified Gram-Schmidt orthogonalization.
//!
//! Maintains the relation A V_i = V_{i+1} Hbar_i, where V_i collects the
//! first i orthonormal basis vectors of the Krylov space K_i(A, b) and
//! Hbar_i is the (i+1) x i upper-Hessenberg matrix. The basis is independent
//! of any regularization parameter, which is what makes the projected
//! Tikhonov solves cheap to repeat for many parameter values.

use num_complex::Complex64;

use crate::defaults;
use crate::error::{Error, Result};
use crate::sparse::ComplexSparseMatrix;
use crate::vec_ops::{caxpy, cdot, cnorm, cscale};

/// Incrementally built Arnoldi decomposition of A with start vector b.
#[derive(Clone, Debug)]
pub struct ArnoldiDecomposition {
    /// Orthonormal basis vectors v_1 .. v_{i+1} (v_{i+1} absent after breakdown).
    basis: Vec<Vec<Complex64>>,
    /// Hessenberg columns; column j holds entries h_{1,j} .. h_{j+2,j}.
    hess: Vec<Vec<Complex64>>,
    /// ||b||, the scale of the start vector.
    start_norm: f64,
    breakdown: bool,
    breakdown_tol: f64,
}

impl ArnoldiDecomposition {
    pub fn new(b: &[Complex64]) -> Result<Self> {
        let norm = cnorm(b);
        if norm == 0.0 {
            return Err(Error::InvalidConfig(
                "Arnoldi start vector must be nonzero".into(),
            ));
        }
        let mut v0 = b.to_vec();
        cscale(1.0 / norm, &mut v0);
        Ok(ArnoldiDecomposition {
            basis: vec![v0],
            hess: Vec::new(),
            start_norm: norm,
            breakdown: false,
            breakdown_tol: defaults::ARNOLDI_BREAKDOWN_TOL,
        })
    }

    /// Number of completed Arnoldi steps (columns of the Hessenberg matrix).
    pub fn steps(&self) -> usize {
        self.hess.len()
    }

    /// Dimension of the constructed Krylov subspace.
    pub fn subspace_dim(&self) -> usize {
        if self.breakdown {
            self.basis.len()
        } else {
            // basis holds i+1 vectors after i steps; the subspace is K_i
            // spanned by the first max(i, 1) vectors.
            self.hess.len().max(1).min(self.basis.len())
        }
    }

    pub fn basis(&self) -> &[Vec<Complex64>] {
        &self.basis
    }

    pub fn start_norm(&self) -> f64 {
        self.start_norm
    }

    pub fn broke_down(&self) -> bool {
        self.breakdown
    }

    /// Append one Arnoldi step: orthogonalize A v_j against the basis and
    /// extend the Hessenberg matrix. Returns `false` on breakdown (the Krylov
    /// space is invariant and cannot grow); the Hessenberg column is still
    /// recorded with a zero subdiagonal entry so the projected problems stay
    /// well defined.
    pub fn extend(&mut self, a: &ComplexSparseMatrix) -> Result<bool> {
        if self.breakdown {
            return Ok(false);
        }
        let j = self.hess.len();
        let vj = &self.basis[j];
        if vj.len() != a.n_cols() {
            return Err(Error::DimensionMismatch {
                context: "arnoldi_extend",
                expected: a.n_cols(),
                found: vj.len(),
            });
        }
        let mut w = a.spmv(vj)?;
        let w_scale = cnorm(&w).max(1.0);
        let mut h = vec![Complex64::new(0.0, 0.0); j + 2];
        for (i, v) in self.basis.iter().enumerate() {
            let hij = cdot(v, &w);
            h[i] = hij;
            caxpy(-hij, v, &mut w);
        }
        let w_norm = cnorm(&w);
        if w_norm < self.breakdown_tol * w_scale {
            h[j + 1] = Complex64::new(0.0, 0.0);
            self.hess.push(h);
            self.breakdown = true;
            return Ok(false);
        }
        h[j + 1] = Complex64::new(w_norm, 0.0);
        self.hess.push(h);
        cscale(1.0 / w_norm, &mut w);
        self.basis.push(w);
        Ok(true)
    }

    /// The (i+1) x i extended Hessenberg matrix as a dense block, with i+1
    /// clamped to the number of stored basis vectors after a breakdown.
    pub fn hessenberg_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let cols = self.hess.len();
        let rows = if self.breakdown { self.basis.len() } else { cols + 1 };
        let mut m = nalgebra::DMatrix::from_element(rows, cols, Complex64::new(0.0, 0.0));
        for (j, col) in self.hess.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                if i < rows {
                    m[(i, j)] = v;
                }
            }
        }
        m
    }

    /// Map coefficients y in the Krylov basis to the full-space vector V y.
    pub fn lift(&self, y: &[Complex64]) -> Vec<Complex64> {
        let n = self.basis[0].len();
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (v, &yi) in self.basis.iter().zip(y) {
            caxpy(yi, v, &mut x);
        }
        x
    }
}
