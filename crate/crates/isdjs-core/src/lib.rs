//! Joint-sparse recovery for the multiple-measurement-vector (MMV) setting.
//!
//! The unknown is an `n x l` matrix `X` whose rows share a common sparse
//! support. Measurements are `B = A X + E` under a common operator `A`
//! (dense, or a randomized partial Walsh-Hadamard transform). The crate
//! provides:
//!
//! * an ADMM solver for the weighted l2,1 model
//!   `min sum_i w_i ||x^i||_2  s.t.  A X = B` with binary weights,
//! * threshold-based support detection ("first significant jump") and the
//!   multi-stage ISDJS loop that alternates solving and detection,
//! * greedy baselines (SOMP, p-thresholding),
//! * an unconstrained weighted solver for multi-task feature learning,
//! * signal/noise generators and recovery metrics used by benchmark
//!   harnesses.
//!
//! The crate is `no_std`-compatible (requires `alloc`); disable the default
//! `std` feature for embedded or kernel targets. All randomness flows from
//! explicit seeds, so every result is reproducible.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod admm;
pub mod baselines;
pub mod error;
pub mod isd;
pub mod kernels;
pub mod linops;
pub mod mat;
pub mod metrics;
pub mod multitask;
pub mod rng;
pub mod synth;

pub use admm::{solve_weighted_l21, AdmmConfig, AdmmResult, AdmmState};
pub use error::Error;
pub use isd::{
    detect_support, first_significant_jump, run_isdjs, FirstSignificantJump, IsdjsConfig,
    IsdjsResult, StageTrace, SupportDetector, SupportSet,
};
pub use kernels::{row_norms, row_shrink, staged_objective, weighted_l21, WeightVector};
pub use linops::MeasurementOperator;
pub use mat::Mat;
pub use metrics::{evaluate, Quadruplet, TrialMetrics};
pub use rng::SplitMix64;
