//! Shared row-norm kernels: the weighted l2,1 norm, the group shrinkage
//! operator, and the staged objective used by the convergence tests.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Binary row weights: `w_i = 0` marks a row detected as truly nonzero
/// (excluded from the penalty), `w_i = 1` keeps the row penalized.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// All-ones weights: the plain (untruncated) l2,1 penalty.
    pub fn ones(n: usize) -> Self {
        WeightVector(alloc::vec![1.0; n])
    }

    /// Validates that every entry is exactly 0 or 1.
    pub fn from_vec(w: Vec<f64>) -> Result<Self> {
        for (i, &v) in w.iter().enumerate() {
            if v != 0.0 && v != 1.0 {
                return Err(Error::NonBinaryWeight { index: i });
            }
        }
        Ok(WeightVector(w))
    }

    /// Weights that are 0 on `detected` (the penalty-free rows) and 1
    /// elsewhere.
    pub fn zero_on(n: usize, detected: &[usize]) -> Self {
        let mut w = alloc::vec![1.0; n];
        for &i in detected {
            w[i] = 0.0;
        }
        WeightVector(w)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_all_ones(&self) -> bool {
        self.0.iter().all(|&v| v == 1.0)
    }
}

#[inline]
fn row_norm(row: &[f64]) -> f64 {
    libm::sqrt(row.iter().map(|v| v * v).sum())
}

/// Euclidean norm of every row: `t_i = ||x^i||_2`.
pub fn row_norms(x: &Mat) -> Vec<f64> {
    (0..x.rows()).map(|i| row_norm(x.row(i))).collect()
}

/// Weighted l2,1 norm `sum_i w_i ||x^i||_2`.
pub fn weighted_l21(x: &Mat, w: &WeightVector) -> Result<f64> {
    if w.len() != x.rows() {
        return Err(Error::LengthMismatch {
            expected: x.rows(),
            got: w.len(),
        });
    }
    let mut acc = 0.0;
    for (i, &wi) in w.as_slice().iter().enumerate() {
        if wi != 0.0 {
            acc += wi * row_norm(x.row(i));
        }
    }
    Ok(acc)
}

/// Row-wise group shrinkage, the proximal map of `sum_i theta_i ||z^i||_2`:
///
/// `z^i = max(||r^i||_2 - theta_i, 0) * r^i / ||r^i||_2`
///
/// Rows with zero norm map to zero (the limit convention), and a zero
/// threshold copies the row through bit-exactly, so unpenalized rows are
/// never perturbed.
pub fn row_shrink(r: &Mat, thresholds: &[f64]) -> Result<Mat> {
    if thresholds.len() != r.rows() {
        return Err(Error::LengthMismatch {
            expected: r.rows(),
            got: thresholds.len(),
        });
    }
    for (i, &t) in thresholds.iter().enumerate() {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::BadThreshold { index: i });
        }
    }
    let mut out = r.clone();
    for (i, &theta) in thresholds.iter().enumerate() {
        if theta == 0.0 {
            continue;
        }
        let row = out.row_mut(i);
        let norm = row_norm(row);
        if norm <= theta {
            for v in row.iter_mut() {
                *v = 0.0;
            }
        } else {
            let scale = (norm - theta) / norm;
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
    }
    Ok(out)
}

/// Staged objective `L(X) + rho * sum_i w_i ||x^i||_2` for a caller-supplied
/// loss evaluator. This is the quantity the multi-stage convergence check
/// monitors.
pub fn staged_objective<F>(x: &Mat, w: &WeightVector, rho: f64, loss: F) -> Result<f64>
where
    F: Fn(&Mat) -> f64,
{
    Ok(loss(x) + rho * weighted_l21(x, w)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use alloc::vec;

    #[test]
    fn row_norms_zero_matrix() {
        let t = row_norms(&Mat::zeros(3, 2));
        assert_eq!(t, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn row_norms_hand_case() {
        let x = Mat::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(row_norms(&x), vec![5.0, 0.0]);
    }

    #[test]
    fn row_norms_single_column_is_abs() {
        let x = Mat::from_rows(&[vec![-2.5], vec![1.5], vec![0.0]]).unwrap();
        assert_eq!(row_norms(&x), vec![2.5, 1.5, 0.0]);
    }

    #[test]
    fn weighted_l21_unweighted_reduction() {
        let x = Mat::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.0]]).unwrap();
        let w = WeightVector::ones(2);
        let val = weighted_l21(&x, &w).unwrap();
        let plain: f64 = row_norms(&x).iter().sum();
        assert!((val - plain).abs() < 1e-15);
    }

    #[test]
    fn weighted_l21_hand_case() {
        let x = Mat::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let w = WeightVector::from_vec(vec![1.0, 1.0, 0.0]).unwrap();
        assert_eq!(weighted_l21(&x, &w).unwrap(), 5.0);
    }

    #[test]
    fn weighted_l21_fully_truncated() {
        let x = Mat::from_rows(&[vec![3.0, 4.0], vec![1.0, 1.0]]).unwrap();
        let w = WeightVector::from_vec(vec![0.0, 0.0]).unwrap();
        assert_eq!(weighted_l21(&x, &w).unwrap(), 0.0);
    }

    #[test]
    fn weighted_l21_length_mismatch() {
        let x = Mat::zeros(3, 1);
        let w = WeightVector::ones(2);
        assert!(weighted_l21(&x, &w).is_err());
    }

    #[test]
    fn weight_vector_rejects_non_binary() {
        assert!(WeightVector::from_vec(vec![0.5]).is_err());
        assert!(WeightVector::from_vec(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn shrink_hand_case() {
        let r = Mat::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let z = row_shrink(&r, &[1.0]).unwrap();
        assert!((z.get(0, 0) - 2.4).abs() < 1e-15);
        assert!((z.get(0, 1) - 3.2).abs() < 1e-15);
    }

    #[test]
    fn shrink_threshold_dominates() {
        let r = Mat::from_rows(&[vec![0.3, 0.4]]).unwrap();
        let z = row_shrink(&r, &[0.5]).unwrap();
        assert_eq!(z.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn shrink_zero_threshold_is_bit_exact_identity() {
        let r = Mat::from_rows(&[vec![0.123456789, -7.5e-3], vec![1.0, 2.0]]).unwrap();
        let z = row_shrink(&r, &[0.0, 0.0]).unwrap();
        assert_eq!(z.as_slice(), r.as_slice());
    }

    #[test]
    fn shrink_zero_row_stays_zero() {
        let r = Mat::zeros(2, 3);
        let z = row_shrink(&r, &[1.0, 2.0]).unwrap();
        assert!(z.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shrink_rejects_negative_threshold() {
        let r = Mat::zeros(1, 2);
        assert!(matches!(
            row_shrink(&r, &[-0.1]),
            Err(Error::BadThreshold { index: 0 })
        ));
    }

    // Independent evaluation of the prox objective
    // 0.5 ||Z - R||_F^2 + sum_i theta_i ||z^i||_2.
    fn prox_objective(z: &Mat, r: &Mat, theta: &[f64]) -> f64 {
        let mut quad = 0.0;
        for (a, b) in z.as_slice().iter().zip(r.as_slice()) {
            quad += (a - b) * (a - b);
        }
        let mut pen = 0.0;
        for (i, &th) in theta.iter().enumerate() {
            pen += th * libm::sqrt(z.row(i).iter().map(|v| v * v).sum());
        }
        0.5 * quad + pen
    }

    #[test]
    fn shrink_minimizes_prox_objective_against_perturbations() {
        let mut rng = SplitMix64::new(555);
        for _ in 0..20 {
            let n = 1 + (rng.next_u64() % 6) as usize;
            let l = 1 + (rng.next_u64() % 3) as usize;
            let mut r = Mat::zeros(n, l);
            for v in r.as_mut_slice() {
                *v = 2.0 * rng.next_normal();
            }
            let theta: Vec<f64> = (0..n).map(|_| rng.next_f64() * 2.0).collect();
            let z = row_shrink(&r, &theta).unwrap();
            let base = prox_objective(&z, &r, &theta);
            for _ in 0..200 {
                let mut zp = z.clone();
                let scale = libm::pow(10.0, -4.0 + 4.0 * rng.next_f64());
                for v in zp.as_mut_slice() {
                    *v += scale * rng.next_normal();
                }
                assert!(prox_objective(&zp, &r, &theta) + 1e-12 >= base);
            }
        }
    }

    #[test]
    fn shrink_nonexpansive() {
        let mut rng = SplitMix64::new(808);
        for _ in 0..50 {
            let n = 1 + (rng.next_u64() % 5) as usize;
            let l = 1 + (rng.next_u64() % 4) as usize;
            let mut r1 = Mat::zeros(n, l);
            let mut r2 = Mat::zeros(n, l);
            for v in r1.as_mut_slice() {
                *v = rng.next_normal();
            }
            for v in r2.as_mut_slice() {
                *v = rng.next_normal();
            }
            let theta: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let z1 = row_shrink(&r1, &theta).unwrap();
            let z2 = row_shrink(&r2, &theta).unwrap();
            assert!(z1.sub(&z2).frob_norm() <= r1.sub(&r2).frob_norm() + 1e-12);
        }
    }

    #[test]
    fn staged_objective_zero_iterate() {
        let b_sq = 7.25;
        let x = Mat::zeros(4, 2);
        let w = WeightVector::ones(4);
        let val = staged_objective(&x, &w, 1.0, |_| b_sq).unwrap();
        assert_eq!(val, b_sq);
    }

    #[test]
    fn staged_objective_matches_recomputation() {
        let x = Mat::from_rows(&[vec![1.0, -1.0], vec![0.5, 0.5]]).unwrap();
        let w = WeightVector::ones(2);
        let rho = 0.7;
        let loss = |m: &Mat| 0.5 * m.frob_norm() * m.frob_norm();
        let val = staged_objective(&x, &w, rho, loss).unwrap();
        let expect = 0.5 * x.dot(&x) + rho * (libm::sqrt(2.0) + libm::sqrt(0.5));
        assert!((val - expect).abs() < 1e-14);
    }

    #[test]
    fn staged_objective_rho_zero_is_pure_loss() {
        let x = Mat::from_rows(&[vec![2.0]]).unwrap();
        let w = WeightVector::ones(1);
        let val = staged_objective(&x, &w, 0.0, |_| 3.5).unwrap();
        assert_eq!(val, 3.5);
    }
}
