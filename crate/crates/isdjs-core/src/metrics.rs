//! Recovery metrics: relative error, support-detection bookkeeping and the
//! per-trial success flag used by recovery-rate sweeps.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::row_norms;
use crate::mat::Mat;

/// Rows of a solver output whose norm is below this fraction of the largest
/// row norm count as numerically zero.
pub const NUMERICAL_ZERO_REL: f64 = 1e-8;

/// Support-detection accuracy bookkeeping per stage or per trial.
/// `detected = correct + false_alarms` always holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quadruplet {
    /// nonzero rows of the ground truth
    pub total: usize,
    /// rows claimed nonzero
    pub detected: usize,
    /// claimed rows that are truly nonzero
    pub correct: usize,
    /// claimed rows that are truly zero
    pub false_alarms: usize,
}

impl Quadruplet {
    pub fn from_sets(claimed: &[usize], true_support: &[usize]) -> Quadruplet {
        let correct = claimed
            .iter()
            .filter(|i| true_support.binary_search(i).is_ok())
            .count();
        Quadruplet {
            total: true_support.len(),
            detected: claimed.len(),
            correct,
            false_alarms: claimed.len() - correct,
        }
    }
}

/// Indices of exactly-nonzero rows (for generated ground truth), sorted.
pub fn exact_support(x: &Mat) -> Vec<usize> {
    (0..x.rows())
        .filter(|&i| x.row(i).iter().any(|&v| v != 0.0))
        .collect()
}

/// Indices of numerically nonzero rows of a solver output: row norm above
/// `NUMERICAL_ZERO_REL` times the largest row norm. Sorted.
pub fn numerical_support(x: &Mat) -> Vec<usize> {
    let t = row_norms(x);
    let max = t.iter().fold(0.0f64, |a, &b| if b > a { b } else { a });
    let cut = NUMERICAL_ZERO_REL * max;
    (0..t.len()).filter(|&i| t[i] > cut && t[i] > 0.0).collect()
}

/// Relative error `||X - Xbar||_F / ||Xbar||_F`; infinity when the truth is
/// zero but the estimate is not.
pub fn rel_err(x: &Mat, x_true: &Mat) -> f64 {
    let denom = x_true.frob_norm();
    let num = x.sub(x_true).frob_norm();
    if denom == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / denom
    }
}

/// Per-trial metrics against a known ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialMetrics {
    pub rel_err: f64,
    pub quadruplet: Quadruplet,
    pub success: bool,
}

/// Scores a recovered matrix against the truth: relative error, support
/// quadruplet (numerical-zero rule on the estimate, exact zeros on the
/// truth) and the success flag `rel_err <= success_threshold`.
pub fn evaluate(x: &Mat, x_true: &Mat, success_threshold: f64) -> Result<TrialMetrics> {
    if x.shape() != x_true.shape() {
        return Err(Error::ShapeMismatch {
            expected: x_true.shape(),
            got: x.shape(),
        });
    }
    let err = rel_err(x, x_true);
    let claimed = numerical_support(x);
    let truth = exact_support(x_true);
    Ok(TrialMetrics {
        rel_err: err,
        quadruplet: Quadruplet::from_sets(&claimed, &truth),
        success: err <= success_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_recovery_scores_perfectly() {
        let x = Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0], vec![3.0, -1.0]]).unwrap();
        let m = evaluate(&x, &x, 1e-3).unwrap();
        assert_eq!(m.rel_err, 0.0);
        assert!(m.success);
        assert_eq!(
            m.quadruplet,
            Quadruplet {
                total: 2,
                detected: 2,
                correct: 2,
                false_alarms: 0
            }
        );
    }

    #[test]
    fn hand_counted_quadruplet() {
        // truth: rows 0 and 1 nonzero; estimate: rows 0 and 2 nonzero
        // -> one correct, one false, one missed
        let truth = Mat::from_rows(&[vec![1.0], vec![2.0], vec![0.0]]).unwrap();
        let est = Mat::from_rows(&[vec![1.0], vec![0.0], vec![0.5]]).unwrap();
        let m = evaluate(&est, &truth, 1e-3).unwrap();
        assert_eq!(
            m.quadruplet,
            Quadruplet {
                total: 2,
                detected: 2,
                correct: 1,
                false_alarms: 1
            }
        );
        assert!(!m.success);
    }

    #[test]
    fn zero_truth_nonzero_estimate_is_infinite_failure() {
        let truth = Mat::zeros(2, 2);
        let est = Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let m = evaluate(&est, &truth, 1e-3).unwrap();
        assert!(m.rel_err.is_infinite());
        assert!(!m.success);
    }

    #[test]
    fn numerical_zero_rule_filters_tiny_rows() {
        let x = Mat::from_rows(&[vec![1.0], vec![1e-12], vec![1e-6]]).unwrap();
        assert_eq!(numerical_support(&x), vec![0, 2]);
    }

    #[test]
    fn shape_mismatch_rejected() {
        assert!(evaluate(&Mat::zeros(2, 2), &Mat::zeros(3, 2), 1e-3).is_err());
    }
}
