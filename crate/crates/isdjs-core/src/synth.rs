//! Synthetic instance generators: row-sparse signals, relative Gaussian
//! noise, and the channel-occupancy scenario for collaborative spectrum
//! sensing.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rng::SplitMix64;

/// Distribution of the nonzero rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalKind {
    /// i.i.d. standard normal entries
    Gaussian,
    /// i.i.d. Rademacher (+-1) entries: no decay across the support, every
    /// nonzero row has norm `sqrt(l)`
    Bernoulli,
}

/// `n x l` matrix with `k` uniformly chosen nonzero rows, the rest zero.
/// Deterministic for a fixed seed.
pub fn gen_row_sparse(n: usize, l: usize, k: usize, kind: SignalKind, seed: u64) -> Result<Mat> {
    if k > n {
        return Err(Error::BadSparsity { k, limit: n });
    }
    let mut rng = SplitMix64::new(seed);
    let rows = rng.sample_distinct(n, k);
    let mut x = Mat::zeros(n, l.max(1));
    if l == 0 {
        return Err(Error::RaggedInput);
    }
    for &r in &rows {
        for v in x.row_mut(r) {
            *v = match kind {
                SignalKind::Gaussian => rng.next_normal(),
                SignalKind::Bernoulli => rng.next_sign(),
            };
        }
    }
    Ok(x)
}

/// Adds i.i.d. Gaussian noise rescaled so that
/// `||E||_F = level * ||B||_F`. `level = 0` (or zero data) returns the
/// input unchanged.
pub fn add_noise(b: &Mat, level: f64, seed: u64) -> Mat {
    assert!(level >= 0.0, "noise level must be nonnegative");
    let bnorm = b.frob_norm();
    if level == 0.0 || bnorm == 0.0 {
        return b.clone();
    }
    let mut rng = SplitMix64::new(seed);
    let mut e = Mat::zeros(b.rows(), b.cols());
    for v in e.as_mut_slice() {
        *v = rng.next_normal();
    }
    let enorm = e.frob_norm();
    let mut out = b.clone();
    out.axpy(level * bnorm / enorm, &e);
    out
}

/// Channel-occupancy ground truth `X = H G^T`: `H` is an
/// `n_channels x n_channels` diagonal 0/1 occupancy matrix with
/// `k_occupied` ones, `G` an `l_nodes x n_channels` gain matrix with
/// entries drawn log-uniformly from `[1e-2, 1]` as a crude stand-in for
/// path loss. Exactly `k_occupied` rows of the result are nonzero and all
/// nonzero entries are positive.
pub fn gen_spectrum_scenario(
    n_channels: usize,
    l_nodes: usize,
    k_occupied: usize,
    seed: u64,
) -> Result<Mat> {
    if k_occupied > n_channels {
        return Err(Error::BadSparsity {
            k: k_occupied,
            limit: n_channels,
        });
    }
    if l_nodes == 0 {
        return Err(Error::RaggedInput);
    }
    let mut rng = SplitMix64::new(seed);
    let occupied = rng.sample_distinct(n_channels, k_occupied);
    let mut x = Mat::zeros(n_channels, l_nodes);
    let ln_lo = libm::log(1e-2);
    for &ch in &occupied {
        for v in x.row_mut(ch) {
            // gain for (node, channel), log-uniform in [1e-2, 1]
            *v = libm::exp(ln_lo * (1.0 - rng.next_f64()));
        }
    }
    Ok(x)
}
