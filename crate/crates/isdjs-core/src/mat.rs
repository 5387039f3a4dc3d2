//! Dense row-major matrices and the few factored kernels the solvers need.
//!
//! Everything is `f64`. The type is deliberately small: the solvers only
//! need products, transposed products, norms and a Cholesky solve for
//! modest symmetric positive definite systems.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Wraps an existing row-major buffer. `data.len()` must equal
    /// `rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::RaggedInput);
        }
        Ok(Mat { rows, cols, data })
    }

    /// Builds from per-row slices, rejecting ragged or empty input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        if nrows == 0 {
            return Err(Error::RaggedInput);
        }
        let ncols = rows[0].len();
        if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::RaggedInput);
        }
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: nrows,
            cols: ncols,
            data,
        })
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    /// `self * other`, shapes must conform.
    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                expected: (self.cols, other.cols),
                got: other.shape(),
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let arow = self.row(r);
            let orow = out.row_mut(r);
            for (k, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self^T * other` without materializing the transpose.
    pub fn transpose_matmul(&self, other: &Mat) -> Result<Mat> {
        if self.rows != other.rows {
            return Err(Error::ShapeMismatch {
                expected: (self.rows, other.cols),
                got: other.shape(),
            });
        }
        let mut out = Mat::zeros(self.cols, other.cols);
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = other.row(k);
            for (c, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[c * other.cols..(c + 1) * other.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Mat {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += s * other` (elementwise), shapes must match.
    pub fn axpy(&mut self, s: f64, other: &Mat) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.shape(), other.shape());
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.shape(), other.shape());
        let mut out = self.clone();
        for (a, &b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn frob_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, &v| {
            let a = libm::fabs(v);
            if a > acc {
                a
            } else {
                acc
            }
        })
    }

    /// Frobenius inner product `<self, other>`.
    pub fn dot(&self, other: &Mat) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Mean of `|entry|` over the whole matrix.
    pub fn mean_abs(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|v| libm::fabs(*v)).sum::<f64>() / self.data.len() as f64
    }
}

/// Cholesky factorization `G = L L^T` of a symmetric positive definite
/// matrix, kept for repeated right-hand-side solves.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    // lower triangle, row-major
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `g`; fails if `g` is not numerically positive definite
    /// (pivots are compared against a relative floor so near-singular
    /// systems are rejected instead of producing garbage factors).
    pub fn new(g: &Mat) -> Option<Cholesky> {
        let n = g.rows();
        if g.cols() != n {
            return None;
        }
        let mut max_diag = 0.0f64;
        for i in 0..n {
            let d = g.get(i, i);
            if d > max_diag {
                max_diag = d;
            }
        }
        let floor = 1e-12 * max_diag;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = g.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= floor || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = libm::sqrt(s);
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Cholesky { n, l })
    }

    /// Solves `G X = B` for every column of `B`.
    pub fn solve(&self, b: &Mat) -> Mat {
        debug_assert_eq!(b.rows(), self.n);
        let n = self.n;
        let cols = b.cols();
        let mut x = b.clone();
        // forward: L y = b
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[i * n + k];
                if lik == 0.0 {
                    continue;
                }
                let (head, tail) = x.as_mut_slice().split_at_mut(i * cols);
                let yk = &head[k * cols..(k + 1) * cols];
                let yi = &mut tail[..cols];
                for (a, &b) in yi.iter_mut().zip(yk) {
                    *a -= lik * b;
                }
            }
            let d = self.l[i * n + i];
            for v in x.row_mut(i) {
                *v /= d;
            }
        }
        // backward: L^T x = y
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lki = self.l[k * n + i];
                if lki == 0.0 {
                    continue;
                }
                let (head, tail) = x.as_mut_slice().split_at_mut(k * cols);
                let xi = &mut head[i * cols..(i + 1) * cols];
                let xk = &tail[..cols];
                for (a, &b) in xi.iter_mut().zip(xk) {
                    *a -= lki * b;
                }
            }
            let d = self.l[i * n + i];
            for v in x.row_mut(i) {
                *v /= d;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_hand_case() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let x = Mat::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let y = a.matmul(&x).unwrap();
        assert_eq!(y.as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn transpose_matmul_matches_explicit() {
        let a = Mat::from_rows(&[vec![1.0, -2.0, 0.5], vec![3.0, 4.0, -1.0]]).unwrap();
        let y = Mat::from_rows(&[vec![2.0, 1.0], vec![-1.0, 0.5]]).unwrap();
        let fast = a.transpose_matmul(&y).unwrap();
        let slow = a.transpose().matmul(&y).unwrap();
        for (u, v) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        assert_eq!(
            Mat::from_rows(&[vec![1.0], vec![1.0, 2.0]]),
            Err(Error::RaggedInput)
        );
        assert_eq!(Mat::from_rows(&[]), Err(Error::RaggedInput));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = Mat::zeros(2, 3);
        let b = Mat::zeros(2, 2);
        assert!(a.matmul(&b).is_err());
    }

    #[test]
    fn cholesky_solves_spd_system() {
        // G = M M^T + I is SPD for any M
        let m = Mat::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.5, -1.0, 3.0]]).unwrap();
        let mut g = m.matmul(&m.transpose()).unwrap();
        for i in 0..2 {
            g.set(i, i, g.get(i, i) + 1.0);
        }
        let b = Mat::from_rows(&[vec![1.0, 0.0], vec![2.0, -1.0]]).unwrap();
        let chol = Cholesky::new(&g).unwrap();
        let x = chol.solve(&b);
        let back = g.matmul(&x).unwrap();
        for (u, v) in back.as_slice().iter().zip(b.as_slice()) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let g = Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(Cholesky::new(&g).is_none());
    }
}
