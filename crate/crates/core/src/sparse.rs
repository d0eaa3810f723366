//! Compressed sparse row matrices.
//!
//! Only the kernels the encoder needs are provided: sparse-dense products in
//! both orientations, plus constructors from dense data and sorted triplets.

use crate::diffmath::DenseMatrix;

/// Real-valued CSR matrix. Column indices within each row are strictly
/// increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays.
    ///
    /// Panics if the arrays are inconsistent; callers inside the crate always
    /// build them from validated data.
    pub(crate) fn from_raw(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        assert_eq!(indptr.len(), rows + 1, "indptr length");
        assert_eq!(indices.len(), values.len(), "indices/values length");
        assert_eq!(*indptr.last().unwrap_or(&0), indices.len(), "indptr tail");
        debug_assert!(indices.iter().all(|&c| c < cols));
        Self {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    /// Collects the nonzero entries of a dense matrix.
    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut indptr = Vec::with_capacity(m.rows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..m.rows() {
            for (j, &v) in m.row(i).iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self::from_raw(m.rows(), m.cols(), indptr, indices, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    /// Stored value at `(i, j)`, or zero.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// `self · b`. The caller checks `self.cols() == b.rows()`.
    pub fn mul_dense(&self, b: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(self.cols, b.rows());
        let width = b.cols();
        let mut out = DenseMatrix::zeros(self.rows, width);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let dst = out.row_mut(i);
            for (&j, &a) in cols.iter().zip(vals) {
                for (d, &x) in dst.iter_mut().zip(b.row(j)) {
                    *d += a * x;
                }
            }
        }
        out
    }

    /// `selfᵀ · g`, accumulated by scattering each stored entry.
    pub fn transpose_mul_dense(&self, g: &DenseMatrix) -> DenseMatrix {
        debug_assert_eq!(self.rows, g.rows());
        let width = g.cols();
        let mut out = DenseMatrix::zeros(self.cols, width);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            let src = g.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                for (d, &x) in out.row_mut(j).iter_mut().zip(src) {
                    *d += a * x;
                }
            }
        }
        out
    }

    /// Drops every stored entry whose column is not kept.
    pub fn filter_columns(&self, keep: &[bool]) -> Self {
        debug_assert_eq!(keep.len(), self.cols);
        let mut indptr = Vec::with_capacity(self.rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..self.rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if keep[j] {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self::from_raw(self.rows, self.cols, indptr, indices, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> DenseMatrix {
        DenseMatrix::from_rows(&[&[0.0, 2.0, 0.0], &[1.0, 0.0, 3.0]])
    }

    #[test]
    fn dense_round_trip() {
        let d = sample();
        let s = CsrMatrix::from_dense(&d);
        assert_eq!(s.nnz(), 3);
        assert_eq!(s.to_dense(), d);
        assert_eq!(s.get(1, 2), 3.0);
        assert_eq!(s.get(0, 0), 0.0);
    }

    #[test]
    fn products_match_dense() {
        let a = sample();
        let s = CsrMatrix::from_dense(&a);
        let b = DenseMatrix::from_rows(&[&[1.0, -1.0], &[0.5, 2.0], &[3.0, 0.0]]);
        assert_eq!(s.mul_dense(&b), a.matmul(&b).unwrap());
        let g = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(s.transpose_mul_dense(&g), a.transpose().matmul(&g).unwrap());
    }

    #[test]
    fn column_filter() {
        let s = CsrMatrix::from_dense(&sample()).filter_columns(&[true, false, true]);
        assert_eq!(
            s.to_dense(),
            DenseMatrix::from_rows(&[&[0.0, 0.0, 0.0], &[1.0, 0.0, 3.0]])
        );
    }
}
