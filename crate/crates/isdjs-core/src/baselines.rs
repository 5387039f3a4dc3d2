//! Greedy comparison algorithms: simultaneous orthogonal matching pursuit
//! and one-shot correlation thresholding. Both take an explicit dense
//! matrix (they need column access), aggregate correlations across channels
//! with the Euclidean norm, and refit by least squares on the selected
//! support. Both are deterministic; score ties go to the lower index.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mat::{Cholesky, Mat};

/// Output of a greedy baseline.
#[derive(Debug, Clone)]
pub struct GreedyResult {
    /// `n x l` estimate, zero off the selected support
    pub x: Mat,
    /// selected column indices, in selection order
    pub support: Vec<usize>,
    /// Frobenius norm of the residual after each refit
    pub residual_norms: Vec<f64>,
    /// set when a selected submatrix was numerically rank deficient and the
    /// refit fell back to a regularized solve
    pub rank_deficient: bool,
}

fn column_norms(a: &Mat) -> Vec<f64> {
    let mut norms = vec![0.0; a.cols()];
    for r in 0..a.rows() {
        for (c, &v) in a.row(r).iter().enumerate() {
            norms[c] += v * v;
        }
    }
    norms.iter().map(|&v| libm::sqrt(v)).collect()
}

/// `||A_j^T R||_2` for every column `j`: the channel-aggregated correlation
/// of column `j` with the residual.
fn correlation_scores(a: &Mat, r: &Mat, col_norms: &[f64]) -> Vec<f64> {
    let n = a.cols();
    let l = r.cols();
    // corr[j][c] = sum_i a[i][j] * r[i][c]
    let mut corr = vec![0.0; n * l];
    for i in 0..a.rows() {
        let arow = a.row(i);
        let rrow = r.row(i);
        for (j, &aij) in arow.iter().enumerate() {
            if aij == 0.0 {
                continue;
            }
            let dst = &mut corr[j * l..(j + 1) * l];
            for (d, &rv) in dst.iter_mut().zip(rrow) {
                *d += aij * rv;
            }
        }
    }
    (0..n)
        .map(|j| {
            if col_norms[j] == 0.0 {
                0.0
            } else {
                libm::sqrt(corr[j * l..(j + 1) * l].iter().map(|v| v * v).sum()) / col_norms[j]
            }
        })
        .collect()
}

/// Least-squares refit of `B` on the columns in `support`; returns the
/// full-size estimate and whether a rank-deficiency fallback was used.
fn least_squares_on_support(a: &Mat, b: &Mat, support: &[usize]) -> Result<(Mat, bool)> {
    let n = a.cols();
    let l = b.cols();
    let k = support.len();
    let mut x = Mat::zeros(n, l);
    if k == 0 {
        return Ok((x, false));
    }
    // normal equations on the submatrix
    let mut gram = Mat::zeros(k, k);
    let mut rhs = Mat::zeros(k, l);
    for i in 0..a.rows() {
        let arow = a.row(i);
        let brow = b.row(i);
        for (p, &jp) in support.iter().enumerate() {
            let apj = arow[jp];
            if apj == 0.0 {
                continue;
            }
            for (q, &jq) in support.iter().enumerate() {
                gram.set(p, q, gram.get(p, q) + apj * arow[jq]);
            }
            let dst = rhs.row_mut(p);
            for (d, &bv) in dst.iter_mut().zip(brow) {
                *d += apj * bv;
            }
        }
    }
    let mut deficient = false;
    let coeffs = match Cholesky::new(&gram) {
        Some(c) => c.solve(&rhs),
        None => {
            // fall back to a Tikhonov-regularized solve
            deficient = true;
            let trace: f64 = (0..k).map(|i| gram.get(i, i)).sum();
            let mut jitter = 1e-10 * trace.max(1.0);
            loop {
                let mut g = gram.clone();
                for i in 0..k {
                    g.set(i, i, g.get(i, i) + jitter);
                }
                if let Some(c) = Cholesky::new(&g) {
                    break c.solve(&rhs);
                }
                jitter *= 10.0;
                if jitter > 1e6 * trace.max(1.0) {
                    return Err(Error::BadConfig(alloc::string::String::from(
                        "selected submatrix is irreparably singular",
                    )));
                }
            }
        }
    };
    for (p, &j) in support.iter().enumerate() {
        x.row_mut(j).copy_from_slice(coeffs.row(p));
    }
    Ok((x, deficient))
}

fn residual(a: &Mat, b: &Mat, x: &Mat) -> Result<Mat> {
    Ok(b.sub(&a.matmul(x)?))
}

/// Simultaneous orthogonal matching pursuit: `k` greedy column selections,
/// each followed by a least-squares refit over the accumulated support.
pub fn somp(a: &Mat, b: &Mat, k: usize) -> Result<GreedyResult> {
    let (m, n) = a.shape();
    if b.rows() != m {
        return Err(Error::ShapeMismatch {
            expected: (m, b.cols()),
            got: b.shape(),
        });
    }
    if k > m.min(n) {
        return Err(Error::BadSparsity { k, limit: m.min(n) });
    }
    let col_norms = column_norms(a);
    let mut support: Vec<usize> = Vec::with_capacity(k);
    let mut selected = vec![false; n];
    let mut res = b.clone();
    let mut x = Mat::zeros(n, b.cols());
    let mut residual_norms = Vec::with_capacity(k);
    let mut deficient = false;

    for _ in 0..k {
        let scores = correlation_scores(a, &res, &col_norms);
        let mut best = None;
        let mut best_score = f64::NEG_INFINITY;
        for (j, &s) in scores.iter().enumerate() {
            if !selected[j] && s > best_score {
                best = Some(j);
                best_score = s;
            }
        }
        let j = best.expect("k <= n leaves an unselected column");
        selected[j] = true;
        support.push(j);
        let (refit, def) = least_squares_on_support(a, b, &support)?;
        deficient |= def;
        x = refit;
        res = residual(a, b, &x)?;
        residual_norms.push(res.frob_norm());
    }

    Ok(GreedyResult {
        x,
        support,
        residual_norms,
        rank_deficient: deficient,
    })
}

/// One-shot correlation thresholding: scores every column against the data
/// once, keeps the `k` best (ties to the lower index) and refits by least
/// squares on that support.
pub fn p_threshold(a: &Mat, b: &Mat, k: usize) -> Result<GreedyResult> {
    let (m, n) = a.shape();
    if b.rows() != m {
        return Err(Error::ShapeMismatch {
            expected: (m, b.cols()),
            got: b.shape(),
        });
    }
    if k > m.min(n) {
        return Err(Error::BadSparsity { k, limit: m.min(n) });
    }
    let col_norms = column_norms(a);
    let scores = correlation_scores(a, b, &col_norms);
    let mut order: Vec<usize> = (0..n).collect();
    // stable ordering: score descending, index ascending on ties
    order.sort_by(|&p, &q| {
        scores[q]
            .partial_cmp(&scores[p])
            .expect("scores are finite")
            .then(p.cmp(&q))
    });
    let mut support: Vec<usize> = order.into_iter().take(k).collect();
    support.sort_unstable();
    let (x, deficient) = least_squares_on_support(a, b, &support)?;
    let res = residual(a, b, &x)?;
    Ok(GreedyResult {
        x,
        support,
        residual_norms: vec![res.frob_norm()],
        rank_deficient: deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::synth::{gen_row_sparse, SignalKind};

    fn random_mat(rows: usize, cols: usize, rng: &mut SplitMix64) -> Mat {
        let mut m = Mat::zeros(rows, cols);
        for v in m.as_mut_slice() {
            *v = rng.next_normal();
        }
        m
    }

    #[test]
    fn somp_identity_recovers_exact_support() {
        let a = Mat::identity(3);
        let mut b = Mat::zeros(3, 2);
        b.row_mut(0).copy_from_slice(&[1.0, -1.0]);
        b.row_mut(2).copy_from_slice(&[2.0, 0.5]);
        let r = somp(&a, &b, 2).unwrap();
        let mut s = r.support.clone();
        s.sort_unstable();
        assert_eq!(s, vec![0, 2]);
        assert!(r.x.sub(&b).max_abs() <= 1e-12);
        assert!(r.residual_norms.last().unwrap() <= &1e-12);
    }

    #[test]
    fn somp_single_step_matches_brute_force() {
        let mut rng = SplitMix64::new(61);
        let a = random_mat(4, 6, &mut rng);
        let x_true = gen_row_sparse(6, 2, 1, SignalKind::Gaussian, 5).unwrap();
        let b = a.matmul(&x_true).unwrap();
        let r = somp(&a, &b, 1).unwrap();

        // brute force: best single-column least-squares fit
        let mut best = (f64::INFINITY, 0);
        for j in 0..6 {
            let (fit, _) = least_squares_on_support(&a, &b, &[j]).unwrap();
            let res = b.sub(&a.matmul(&fit).unwrap()).frob_norm();
            if res < best.0 {
                best = (res, j);
            }
        }
        assert_eq!(r.support, vec![best.1]);
    }

    #[test]
    fn somp_zero_data_gives_zero() {
        let mut rng = SplitMix64::new(62);
        let a = random_mat(4, 6, &mut rng);
        let b = Mat::zeros(4, 2);
        let r = somp(&a, &b, 2).unwrap();
        assert!(r.x.max_abs() == 0.0);
        assert!(r.residual_norms.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn somp_residual_monotone() {
        let mut rng = SplitMix64::new(63);
        for trial in 0..5 {
            let a = random_mat(10, 16, &mut rng);
            let x_true = gen_row_sparse(16, 3, 4, SignalKind::Gaussian, trial).unwrap();
            let b = a.matmul(&x_true).unwrap();
            let r = somp(&a, &b, 6).unwrap();
            let mut prev = b.frob_norm();
            for &norm in &r.residual_norms {
                assert!(norm <= prev + 1e-10);
                prev = norm;
            }
        }
    }

    #[test]
    fn somp_rejects_oversized_k() {
        let a = Mat::identity(3);
        assert!(matches!(
            somp(&a, &Mat::zeros(3, 1), 4),
            Err(Error::BadSparsity { .. })
        ));
    }

    #[test]
    fn p_threshold_identity_exact() {
        let a = Mat::identity(4);
        let mut b = Mat::zeros(4, 2);
        b.row_mut(1).copy_from_slice(&[1.0, 1.0]);
        b.row_mut(3).copy_from_slice(&[-2.0, 0.0]);
        let r = p_threshold(&a, &b, 2).unwrap();
        assert_eq!(r.support, vec![1, 3]);
        assert!(r.x.sub(&b).max_abs() <= 1e-12);
    }

    #[test]
    fn p_threshold_tie_at_kth_place_prefers_lower_index() {
        // columns 1 and 2 are identical, so their scores tie exactly at
        // the k-th place; the lower index must win
        let a = Mat::from_rows(&[alloc::vec![1.0, 0.6, 0.6], alloc::vec![0.0, 0.8, 0.8]]).unwrap();
        let b = Mat::from_rows(&[alloc::vec![1.0], alloc::vec![0.0]]).unwrap();
        let r = p_threshold(&a, &b, 2).unwrap();
        assert_eq!(r.support, alloc::vec![0, 1]);
    }

    #[test]
    fn p_threshold_scores_match_recomputation() {
        let mut rng = SplitMix64::new(64);
        let a = random_mat(8, 16, &mut rng);
        let x_true = gen_row_sparse(16, 2, 2, SignalKind::Gaussian, 77).unwrap();
        let b = a.matmul(&x_true).unwrap();
        let r = p_threshold(&a, &b, 2).unwrap();

        // independent score recomputation
        let mut scores = alloc::vec![0.0f64; 16];
        for (j, score) in scores.iter_mut().enumerate() {
            let mut dot = [0.0f64; 2];
            let mut nrm = 0.0;
            for i in 0..8 {
                nrm += a.get(i, j) * a.get(i, j);
                for (c, d) in dot.iter_mut().enumerate() {
                    *d += a.get(i, j) * b.get(i, c);
                }
            }
            *score = (dot[0] * dot[0] + dot[1] * dot[1]).sqrt() / nrm.sqrt();
        }
        let mut order: Vec<usize> = (0..16).collect();
        order.sort_by(|&p, &q| scores[q].partial_cmp(&scores[p]).unwrap().then(p.cmp(&q)));
        let mut expect: Vec<usize> = order.into_iter().take(2).collect();
        expect.sort_unstable();
        assert_eq!(r.support, expect);
    }

    #[test]
    fn deterministic_given_inputs() {
        let mut rng = SplitMix64::new(65);
        let a = random_mat(6, 10, &mut rng);
        let b = random_mat(6, 2, &mut rng);
        let r1 = somp(&a, &b, 3).unwrap();
        let r2 = somp(&a, &b, 3).unwrap();
        assert_eq!(r1.support, r2.support);
        assert_eq!(r1.x.as_slice(), r2.x.as_slice());
    }

    #[test]
    fn rank_deficient_flagged_not_fatal() {
        // duplicate columns force a singular Gram matrix once both are in
        let a = Mat::from_rows(&[
            alloc::vec![1.0, 1.0, 0.0],
            alloc::vec![1.0, 1.0, 0.0],
            alloc::vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let b = Mat::from_rows(&[alloc::vec![2.0], alloc::vec![2.0], alloc::vec![0.0]]).unwrap();
        let r = somp(&a, &b, 2).unwrap();
        assert!(r.rank_deficient);
        assert!(r.residual_norms.last().unwrap() <= &1e-5);
    }
}
