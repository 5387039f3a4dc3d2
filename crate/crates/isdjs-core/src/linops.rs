//! Measurement operators for `B = A X + E`.
//!
//! Two kinds are supported: explicit dense matrices, and randomized partial
//! Walsh-Hadamard transforms (pwh). A pwh operator keeps `m` rows of the
//! `n x n` Sylvester-ordered Hadamard matrix, composed with a random column
//! permutation and column sign flips, scaled by `1/sqrt(n)`. Its rows are
//! orthonormal by construction (`A A^T = I`), which the ADMM solver exploits
//! through a closed-form inverse, and applying it costs `O(l n log n)` via
//! the fast transform instead of `O(l m n)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rng::SplitMix64;

/// A linear operator with forward and adjoint actions.
#[derive(Debug, Clone)]
pub enum MeasurementOperator {
    /// Explicit `m x n` matrix.
    Dense { a: Mat },
    /// Randomized partial Walsh-Hadamard transform.
    PartialWalshHadamard {
        n: usize,
        m: usize,
        seed: u64,
        /// selected Hadamard rows, distinct, in `0..n`
        rows: Vec<usize>,
        /// column sign flips, each +-1
        signs: Vec<f64>,
        /// column permutation of `0..n`
        perm: Vec<usize>,
    },
}

/// In-place fast Walsh-Hadamard transform in Sylvester (natural) order,
/// applied to each column of a row-major `n x l` buffer. Unnormalized:
/// the matrix applied is `H_n` with entries +-1.
fn fwht_rows(buf: &mut [f64], n: usize, l: usize) {
    debug_assert_eq!(buf.len(), n * l);
    let mut half = 1;
    while half < n {
        let step = half * 2;
        let mut block = 0;
        while block < n {
            for j in block..block + half {
                let (lo, hi) = buf.split_at_mut((j + half) * l);
                let top = &mut lo[j * l..j * l + l];
                let bot = &mut hi[..l];
                for (a, b) in top.iter_mut().zip(bot.iter_mut()) {
                    let s = *a + *b;
                    let d = *a - *b;
                    *a = s;
                    *b = d;
                }
            }
            block += step;
        }
        half = step;
    }
}

impl MeasurementOperator {
    /// Wraps explicit entries as a dense operator.
    pub fn make_dense(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(MeasurementOperator::Dense {
            a: Mat::from_rows(rows)?,
        })
    }

    pub fn from_mat(a: Mat) -> Self {
        MeasurementOperator::Dense { a }
    }

    /// Builds a randomized partial Walsh-Hadamard operator: `m` distinct
    /// Hadamard rows sampled uniformly, random column signs and permutation,
    /// scaled so that `A A^T = I`. Deterministic for a fixed seed.
    pub fn make_pwh(n: usize, m: usize, seed: u64) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo { n });
        }
        if m == 0 || m > n {
            return Err(Error::BadMeasurementCount { m, n });
        }
        let mut rng = SplitMix64::new(seed);
        let mut rows = rng.sample_distinct(n, m);
        rows.sort_unstable();
        let signs: Vec<f64> = (0..n).map(|_| rng.next_sign()).collect();
        let perm = rng.permutation(n);
        Ok(MeasurementOperator::PartialWalshHadamard {
            n,
            m,
            seed,
            rows,
            signs,
            perm,
        })
    }

    /// Dense operator with rows orthonormalized from i.i.d. Gaussian
    /// entries (modified Gram-Schmidt with one reorthogonalization pass),
    /// so `A A^T = I` holds for dimensions that are not powers of two.
    pub fn make_gaussian_orthonormal(m: usize, n: usize, seed: u64) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::BadMeasurementCount { m, n });
        }
        let mut rng = SplitMix64::new(seed);
        let mut a = Mat::zeros(m, n);
        for r in 0..m {
            for v in a.row_mut(r) {
                *v = rng.next_normal();
            }
        }
        for r in 0..m {
            for _pass in 0..2 {
                for p in 0..r {
                    let dot: f64 = a.row(r).iter().zip(a.row(p)).map(|(x, y)| x * y).sum();
                    let prev: Vec<f64> = a.row(p).to_vec();
                    for (x, y) in a.row_mut(r).iter_mut().zip(prev) {
                        *x -= dot * y;
                    }
                }
            }
            let norm = libm::sqrt(a.row(r).iter().map(|v| v * v).sum());
            // Gaussian rows are independent almost surely; a zero norm here
            // would mean a degenerate draw.
            if norm == 0.0 {
                return Err(Error::BadConfig(alloc::string::String::from(
                    "degenerate Gaussian draw while orthonormalizing",
                )));
            }
            for v in a.row_mut(r) {
                *v /= norm;
            }
        }
        Ok(MeasurementOperator::Dense { a })
    }

    /// `(m, n)`: measurement count and signal dimension.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            MeasurementOperator::Dense { a } => (a.rows(), a.cols()),
            MeasurementOperator::PartialWalshHadamard { n, m, .. } => (*m, *n),
        }
    }

    /// Seed of a pwh operator; `None` for dense.
    pub fn seed(&self) -> Option<u64> {
        match self {
            MeasurementOperator::Dense { .. } => None,
            MeasurementOperator::PartialWalshHadamard { seed, .. } => Some(*seed),
        }
    }

    /// True when `A A^T = I` holds by construction.
    pub fn rows_orthonormal_by_construction(&self) -> bool {
        matches!(self, MeasurementOperator::PartialWalshHadamard { .. })
    }

    /// Forward action `A X` for an `n x l` input.
    pub fn apply(&self, x: &Mat) -> Result<Mat> {
        let (m, n) = self.dims();
        if x.rows() != n {
            return Err(Error::ShapeMismatch {
                expected: (n, x.cols()),
                got: x.shape(),
            });
        }
        match self {
            MeasurementOperator::Dense { a } => a.matmul(x),
            MeasurementOperator::PartialWalshHadamard {
                rows, signs, perm, ..
            } => {
                let l = x.cols();
                let mut buf = vec![0.0; n * l];
                for i in 0..n {
                    let src = x.row(perm[i]);
                    let s = signs[i];
                    let dst = &mut buf[i * l..(i + 1) * l];
                    for (d, &v) in dst.iter_mut().zip(src) {
                        *d = s * v;
                    }
                }
                fwht_rows(&mut buf, n, l);
                let scale = 1.0 / libm::sqrt(n as f64);
                let mut out = Mat::zeros(m, l);
                for (r, &hrow) in rows.iter().enumerate() {
                    let src = &buf[hrow * l..(hrow + 1) * l];
                    for (d, &v) in out.row_mut(r).iter_mut().zip(src) {
                        *d = scale * v;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Adjoint action `A^T Y` for an `m x l` input.
    pub fn apply_adjoint(&self, y: &Mat) -> Result<Mat> {
        let (m, n) = self.dims();
        if y.rows() != m {
            return Err(Error::ShapeMismatch {
                expected: (m, y.cols()),
                got: y.shape(),
            });
        }
        match self {
            MeasurementOperator::Dense { a } => a.transpose_matmul(y),
            MeasurementOperator::PartialWalshHadamard {
                rows, signs, perm, ..
            } => {
                let l = y.cols();
                let mut buf = vec![0.0; n * l];
                for (r, &hrow) in rows.iter().enumerate() {
                    buf[hrow * l..(hrow + 1) * l].copy_from_slice(y.row(r));
                }
                // H is symmetric, so the adjoint is another full transform
                fwht_rows(&mut buf, n, l);
                let scale = 1.0 / libm::sqrt(n as f64);
                let mut out = Mat::zeros(n, l);
                for i in 0..n {
                    let s = signs[i] * scale;
                    let src = &buf[i * l..(i + 1) * l];
                    let dst = out.row_mut(perm[i]);
                    for (d, &v) in dst.iter_mut().zip(src) {
                        *d = s * v;
                    }
                }
                Ok(out)
            }
        }
    }

    /// The operator as an explicit `m x n` matrix (columns recovered by
    /// applying to identity basis vectors). Greedy baselines need this.
    pub fn materialize(&self) -> Mat {
        match self {
            MeasurementOperator::Dense { a } => a.clone(),
            MeasurementOperator::PartialWalshHadamard { n, .. } => {
                let eye = Mat::identity(*n);
                self.apply(&eye).expect("identity conforms")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram(a: &Mat) -> Mat {
        a.matmul(&a.transpose()).unwrap()
    }

    fn max_dev_from_identity(g: &Mat) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - target).abs());
            }
        }
        worst
    }

    #[test]
    fn full_2x2_pwh_is_orthonormal() {
        // complete transform: orthonormality is exact up to the rounding
        // of the irrational 1/sqrt(2) scale
        for seed in [0u64, 1, 99] {
            let op = MeasurementOperator::make_pwh(2, 2, seed).unwrap();
            let g = gram(&op.materialize());
            assert!(max_dev_from_identity(&g) <= 1e-15);
        }
    }

    #[test]
    fn pwh_rows_orthonormal_8x4() {
        let op = MeasurementOperator::make_pwh(8, 4, 7).unwrap();
        let a = op.materialize();
        // brute-force A A^T against the identity
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = a.row(i).iter().zip(a.row(j)).map(|(x, y)| x * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((dot - target).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn pwh_orthonormal_across_sizes() {
        for &(n, m) in &[(8usize, 4usize), (16, 8), (64, 17), (1024, 256)] {
            let op = MeasurementOperator::make_pwh(n, m, 99).unwrap();
            let a = op.materialize();
            assert!(max_dev_from_identity(&gram(&a)) <= 1e-12, "n={n} m={m}");
        }
    }

    #[test]
    fn pwh_deterministic_for_seed() {
        let a = MeasurementOperator::make_pwh(16, 5, 42)
            .unwrap()
            .materialize();
        let b = MeasurementOperator::make_pwh(16, 5, 42)
            .unwrap()
            .materialize();
        assert_eq!(a.as_slice(), b.as_slice());
        let c = MeasurementOperator::make_pwh(16, 5, 43)
            .unwrap()
            .materialize();
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn pwh_input_validation() {
        assert!(matches!(
            MeasurementOperator::make_pwh(12, 4, 0),
            Err(Error::NotPowerOfTwo { n: 12 })
        ));
        assert!(matches!(
            MeasurementOperator::make_pwh(8, 9, 0),
            Err(Error::BadMeasurementCount { m: 9, n: 8 })
        ));
        assert!(MeasurementOperator::make_pwh(8, 0, 0).is_err());
    }

    #[test]
    fn dense_identity_apply() {
        let op = MeasurementOperator::make_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let x = Mat::from_rows(&[vec![3.0, -1.0], vec![2.0, 5.0]]).unwrap();
        let y = op.apply(&x).unwrap();
        assert_eq!(y.as_slice(), x.as_slice());
    }

    #[test]
    fn dense_hand_product() {
        let op = MeasurementOperator::make_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let x = Mat::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let y = op.apply(&x).unwrap();
        assert_eq!(y.as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn dense_rejects_empty() {
        assert!(matches!(
            MeasurementOperator::make_dense(&[]),
            Err(Error::RaggedInput)
        ));
    }

    #[test]
    fn apply_zero_is_zero() {
        let op = MeasurementOperator::make_pwh(16, 8, 5).unwrap();
        let y = op.apply(&Mat::zeros(16, 3)).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fast_apply_matches_dense_materialization() {
        for &(n, m) in &[(8usize, 4usize), (16, 8), (64, 33), (1024, 200)] {
            let op = MeasurementOperator::make_pwh(n, m, 17).unwrap();
            let a = op.materialize();
            let mut rng = SplitMix64::new(1000 + n as u64);
            let mut x = Mat::zeros(n, 3);
            for v in x.as_mut_slice() {
                *v = rng.next_normal();
            }
            let fast = op.apply(&x).unwrap();
            let slow = a.matmul(&x).unwrap();
            let dev = fast.sub(&slow).max_abs();
            assert!(dev <= 1e-10, "n={n} m={m} dev={dev}");

            let mut y = Mat::zeros(m, 3);
            for v in y.as_mut_slice() {
                *v = rng.next_normal();
            }
            let fast_t = op.apply_adjoint(&y).unwrap();
            let slow_t = a.transpose_matmul(&y).unwrap();
            assert!(fast_t.sub(&slow_t).max_abs() <= 1e-10);
        }
    }

    #[test]
    fn adjoint_inner_product_identity() {
        let mut rng = SplitMix64::new(2024);
        for trial in 0..10 {
            let op = if trial % 2 == 0 {
                MeasurementOperator::make_pwh(16, 8, trial).unwrap()
            } else {
                MeasurementOperator::make_gaussian_orthonormal(6, 11, trial).unwrap()
            };
            let (m, n) = op.dims();
            let mut x = Mat::zeros(n, 2);
            let mut y = Mat::zeros(m, 2);
            for v in x.as_mut_slice() {
                *v = rng.next_normal();
            }
            for v in y.as_mut_slice() {
                *v = rng.next_normal();
            }
            let lhs = op.apply(&x).unwrap().dot(&y);
            let rhs = x.dot(&op.apply_adjoint(&y).unwrap());
            assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn gaussian_orthonormal_rows() {
        let op = MeasurementOperator::make_gaussian_orthonormal(80, 600, 31).unwrap();
        let a = op.materialize();
        assert!(max_dev_from_identity(&gram(&a)) <= 1e-12);
    }

    #[test]
    fn apply_shape_mismatch() {
        let op = MeasurementOperator::make_pwh(8, 4, 1).unwrap();
        assert!(op.apply(&Mat::zeros(7, 2)).is_err());
        assert!(op.apply_adjoint(&Mat::zeros(8, 2)).is_err());
    }
}
