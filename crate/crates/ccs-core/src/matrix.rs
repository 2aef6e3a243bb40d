//! Dense row-major matrix storage and the handful of BLAS-3 style
//! products the solvers need. Products are routed through
//! `matrixmultiply::dgemm`, everything else is plain loops.

use crate::error::{Error, Result};

/// Dense real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data, rejecting length mismatches and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "entry ({}, {}) is {}",
                pos / cols.max(1),
                pos % cols.max(1),
                data[pos]
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `A * B`.
    pub fn matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        gemm(
            self.rows, self.cols, rhs.cols,
            self.data.as_ptr(), self.cols as isize, 1,
            rhs.data.as_ptr(), rhs.cols as isize, 1,
            out.data.as_mut_ptr(), rhs.cols as isize, 1,
        );
        out
    }

    /// `Aᵀ * B` without materializing the transpose.
    pub fn tr_matmul(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.rows, rhs.rows, "tr_matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.cols, rhs.cols);
        gemm(
            self.cols, self.rows, rhs.cols,
            self.data.as_ptr(), 1, self.cols as isize,
            rhs.data.as_ptr(), rhs.cols as isize, 1,
            out.data.as_mut_ptr(), rhs.cols as isize, 1,
        );
        out
    }

    /// `A * Bᵀ` without materializing the transpose.
    pub fn matmul_tr(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, rhs.cols, "matmul_tr shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, rhs.rows);
        gemm(
            self.rows, self.cols, rhs.rows,
            self.data.as_ptr(), self.cols as isize, 1,
            rhs.data.as_ptr(), 1, rhs.cols as isize,
            out.data.as_mut_ptr(), rhs.rows as isize, 1,
        );
        out
    }

    pub fn select_rows(&self, indices: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(indices.len(), self.cols);
        for (local, &i) in indices.iter().enumerate() {
            assert!(i < self.rows, "row index {} out of range", i);
            out.row_mut(local).copy_from_slice(self.row(i));
        }
        out
    }

    pub fn select_cols(&self, indices: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, indices.len());
        for i in 0..self.rows {
            let src = self.row(i);
            let dst = out.row_mut(i);
            for (local, &j) in indices.iter().enumerate() {
                assert!(j < self.cols, "column index {} out of range", j);
                dst[local] = src[j];
            }
        }
        out
    }

    pub fn submatrix(&self, row_indices: &[usize], col_indices: &[usize]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(row_indices.len(), col_indices.len());
        for (li, &i) in row_indices.iter().enumerate() {
            let src = self.row(i);
            let dst = out.row_mut(li);
            for (lj, &j) in col_indices.iter().enumerate() {
                dst[lj] = src[j];
            }
        }
        out
    }

    /// Overwrites the columns listed in `col_indices` with the columns of
    /// `values` (same row count, one column per index).
    pub fn set_cols(&mut self, col_indices: &[usize], values: &DenseMatrix) {
        assert_eq!(self.rows, values.rows());
        assert_eq!(col_indices.len(), values.cols());
        for i in 0..self.rows {
            for (lj, &j) in col_indices.iter().enumerate() {
                self.data[i * self.cols + j] = values.get(i, lj);
            }
        }
    }

    /// Overwrites the rows listed in `row_indices` with the rows of `values`.
    pub fn set_rows(&mut self, row_indices: &[usize], values: &DenseMatrix) {
        assert_eq!(self.cols, values.cols());
        assert_eq!(row_indices.len(), values.rows());
        for (li, &i) in row_indices.iter().enumerate() {
            self.row_mut(i).copy_from_slice(values.row(li));
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn sub(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn add(&self, rhs: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize, k: usize, n: usize,
    a: *const f64, rsa: isize, csa: isize,
    b: *const f64, rsb: isize, csb: isize,
    c: *mut f64, rsc: isize, csc: isize,
) {
    unsafe {
        matrixmultiply::dgemm(m, k, n, 1.0, a, rsa, csa, b, rsb, csb, 0.0, c, rsc, csc);
    }
}
