//! Compressed sparse row storage for complex matrices.
//!
//! CSR is the single sparse format in this crate. Matrices are assembled
//! through a coordinate-triplet builder that sorts entries and merges
//! duplicates by summing, which is how the Helmholtz stencils are naturally
//! written down. All vectors are dense.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex sparse matrix in CSR layout.
///
/// Invariants (enforced by construction):
/// - `row_offsets.len() == n_rows + 1`, nondecreasing, last entry = `values.len()`
/// - column indices are strictly increasing within each row and `< n_cols`
#[derive(Clone, Debug)]
pub struct ComplexSparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl ComplexSparseMatrix {
    /// Build from coordinate triplets. Entries are sorted by (row, col) and
    /// duplicates are merged by summing their values.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        mut triplets: Vec<(usize, usize, Complex64)>,
    ) -> Result<Self> {
        for &(r, c, _) in &triplets {
            if r >= n_rows {
                return Err(Error::DimensionMismatch {
                    context: "triplet row index",
                    expected: n_rows,
                    found: r,
                });
            }
            if c >= n_cols {
                return Err(Error::DimensionMismatch {
                    context: "triplet column index",
                    expected: n_cols,
                    found: c,
                });
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));

        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        let mut current_row = 0usize;
        for (r, c, v) in triplets {
            while current_row < r {
                row_offsets.push(col_indices.len());
                current_row += 1;
            }
            if col_indices.len() > *row_offsets.last().unwrap() && *col_indices.last().unwrap() == c
            {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
            }
        }
        while current_row < n_rows {
            row_offsets.push(col_indices.len());
            current_row += 1;
        }

        Ok(ComplexSparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        ComplexSparseMatrix {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// A · x
    pub fn spmv(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                context: "spmv input",
                expected: self.n_cols,
                found: x.len(),
            });
        }
        let mut y = vec![Complex64::new(0.0, 0.0); self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// A · x into a preallocated output (lengths assumed checked by caller).
    pub fn spmv_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (row, yi) in y.iter_mut().enumerate() {
            let lo = self.row_offsets[row];
            let hi = self.row_offsets[row + 1];
            let mut acc = Complex64::new(0.0, 0.0);
            for (&col, &val) in self.col_indices[lo..hi].iter().zip(&self.values[lo..hi]) {
                acc += val * x[col];
            }
            *yi = acc;
        }
    }

    /// A* · y, where A* is the conjugate transpose.
    pub fn spmv_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                context: "spmv_adjoint input",
                expected: self.n_rows,
                found: y.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_cols];
        for row in 0..self.n_rows {
            let lo = self.row_offsets[row];
            let hi = self.row_offsets[row + 1];
            let yr = y[row];
            for (&col, &val) in self.col_indices[lo..hi].iter().zip(&self.values[lo..hi]) {
                out[col] += val.conj() * yr;
            }
        }
        Ok(out)
    }

    /// The conjugate transpose as an explicit CSR matrix.
    pub fn adjoint(&self) -> ComplexSparseMatrix {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let mut row_offsets = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![Complex64::new(0.0, 0.0); self.nnz()];
        for row in 0..self.n_rows {
            for idx in self.row_offsets[row]..self.row_offsets[row + 1] {
                let c = self.col_indices[idx];
                let slot = counts[c];
                col_indices[slot] = row;
                values[slot] = self.values[idx].conj();
                counts[c] += 1;
            }
        }
        // Rows of the result are filled in increasing original-row order, so
        // column indices are already strictly increasing.
        row_offsets[self.n_cols] = self.nnz();
        ComplexSparseMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Dense copy, for small oracles and projected systems.
    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut dense = nalgebra::DMatrix::from_element(
            self.n_rows,
            self.n_cols,
            Complex64::new(0.0, 0.0),
        );
        for row in 0..self.n_rows {
            for idx in self.row_offsets[row]..self.row_offsets[row + 1] {
                dense[(row, self.col_indices[idx])] = self.values[idx];
            }
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::vec_ops::{cdot, cnorm};

    fn random_matrix(rng: &mut SplitMix64, n_rows: usize, n_cols: usize) -> ComplexSparseMatrix {
        let mut triplets = Vec::new();
        for r in 0..n_rows {
            for c in 0..n_cols {
                if rng.next_unit_open() < 0.6 {
                    triplets.push((
                        r,
                        c,
                        Complex64::new(rng.next_standard_normal(), rng.next_standard_normal()),
                    ));
                }
            }
        }
        ComplexSparseMatrix::from_triplets(n_rows, n_cols, triplets).unwrap()
    }

    fn random_vec(rng: &mut SplitMix64, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.next_standard_normal(), rng.next_standard_normal()))
            .collect()
    }

    #[test]
    fn identity_spmv() {
        let a = ComplexSparseMatrix::identity(2);
        let x = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
        assert_eq!(a.spmv(&x).unwrap(), x);
    }

    #[test]
    fn zero_matrix_spmv() {
        let a = ComplexSparseMatrix::from_triplets(3, 3, vec![]).unwrap();
        let x = vec![Complex64::new(1.0, 1.0); 3];
        let y = a.spmv(&x).unwrap();
        assert!(y.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn spmv_matches_dense_oracle() {
        let mut rng = SplitMix64::new(1);
        for _ in 0..5 {
            let a = random_matrix(&mut rng, 5, 5);
            let x = random_vec(&mut rng, 5);
            let sparse = a.spmv(&x).unwrap();
            let dense = a.to_dense() * nalgebra::DVector::from_vec(x.clone());
            for (s, d) in sparse.iter().zip(dense.iter()) {
                assert!((s - d).norm() <= 1e-14 * (1.0 + d.norm()));
            }
        }
    }

    #[test]
    fn adjoint_of_single_imaginary_entry() {
        let a =
            ComplexSparseMatrix::from_triplets(1, 1, vec![(0, 0, Complex64::new(0.0, 1.0))])
                .unwrap();
        let y = vec![Complex64::new(1.0, 0.0)];
        assert_eq!(a.spmv_adjoint(&y).unwrap(), vec![Complex64::new(0.0, -1.0)]);
    }

    #[test]
    fn real_symmetric_adjoint_equals_spmv() {
        let t = vec![
            (0, 0, Complex64::new(2.0, 0.0)),
            (0, 1, Complex64::new(-1.0, 0.0)),
            (1, 0, Complex64::new(-1.0, 0.0)),
            (1, 1, Complex64::new(2.0, 0.0)),
        ];
        let a = ComplexSparseMatrix::from_triplets(2, 2, t).unwrap();
        let y = vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5)];
        assert_eq!(a.spmv_adjoint(&y).unwrap(), a.spmv(&y).unwrap());
    }

    #[test]
    fn adjoint_inner_product_identity() {
        // <y|Ax> = <A*y|x> for random rectangular matrices.
        let mut rng = SplitMix64::new(2);
        for _ in 0..10 {
            let a = random_matrix(&mut rng, 6, 4);
            let x = random_vec(&mut rng, 4);
            let y = random_vec(&mut rng, 6);
            let lhs = cdot(&y, &a.spmv(&x).unwrap());
            let rhs = cdot(&a.spmv_adjoint(&y).unwrap(), &x);
            let scale = cnorm(&x) * cnorm(&y) + 1.0;
            assert!((lhs - rhs).norm() <= 1e-13 * scale, "lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn explicit_adjoint_matches_spmv_adjoint() {
        let mut rng = SplitMix64::new(3);
        let a = random_matrix(&mut rng, 7, 5);
        let at = a.adjoint();
        let y = random_vec(&mut rng, 7);
        let via_op = a.spmv_adjoint(&y).unwrap();
        let via_matrix = at.spmv(&y).unwrap();
        for (u, v) in via_op.iter().zip(&via_matrix) {
            assert!((u - v).norm() <= 1e-14 * (1.0 + v.norm()));
        }
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let t = vec![
            (0, 0, Complex64::new(1.0, 0.0)),
            (0, 0, Complex64::new(2.5, -1.0)),
        ];
        let a = ComplexSparseMatrix::from_triplets(1, 1, t).unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.values()[0], Complex64::new(3.5, -1.0));
    }

    #[test]
    fn csr_layout_invariants_hold() {
        let mut rng = SplitMix64::new(4);
        let a = random_matrix(&mut rng, 9, 6);
        assert_eq!(a.row_offsets().len(), a.n_rows() + 1);
        assert_eq!(*a.row_offsets().last().unwrap(), a.values().len());
        for row in 0..a.n_rows() {
            let lo = a.row_offsets()[row];
            let hi = a.row_offsets()[row + 1];
            assert!(lo <= hi);
            for w in a.col_indices()[lo..hi].windows(2) {
                assert!(w[0] < w[1], "column indices must be strictly increasing");
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = ComplexSparseMatrix::identity(3);
        assert!(a.spmv(&[Complex64::new(1.0, 0.0); 2]).is_err());
        assert!(a.spmv_adjoint(&[Complex64::new(1.0, 0.0); 4]).is_err());
    }
}
