//! ADMM solver for the constrained weighted l2,1 model
//!
//! `min_X sum_i w_i ||x^i||_2   s.t.   A X = B`
//!
//! with binary weights `w`. One sweep updates, in order:
//!
//! * `X <- (beta1 I + beta2 A^T A)^{-1} (beta1 Z - L1 + beta2 A^T B + A^T L2)`
//! * `Z <- shrink(X + L1/beta1, w/beta1)`  (row-wise group shrinkage)
//! * `L1 <- L1 - gamma1 beta1 (Z - X)`
//! * `L2 <- L2 - gamma2 beta2 (A X - B)`
//!
//! When the operator has orthonormal rows (`A A^T = I`), `A^T A` is a
//! projection and the X-update inverse has the closed form
//! `(1/beta1)(I - beta2/(beta1+beta2) A^T A)`. Otherwise an `m x m`
//! Cholesky factorization of `(beta1/beta2) I + A A^T` is built once and
//! reused every iteration (Woodbury identity).
//!
//! Iterations stop when the relative change of the row-norm vector
//! `||t_{k+1} - t_k|| / ||t_{k+1}||` falls below the configured tolerance.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::kernels::{row_norms, row_shrink, WeightVector};
use crate::linops::MeasurementOperator;
use crate::mat::{Cholesky, Mat};

/// Relaxation steps must stay below the golden ratio for convergence.
pub const MAX_STEP_LENGTH: f64 = 1.618033988749895;

pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 5000;

/// Penalties, step lengths and stopping controls for one ADMM solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// stopping tolerance on the relative row-norm change
    pub tol: f64,
    pub max_iters: usize,
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 > 0.0 && self.beta2 > 0.0) {
            return Err(Error::BadConfig(format!(
                "penalties must be positive: beta1={}, beta2={}",
                self.beta1, self.beta2
            )));
        }
        let bound = MAX_STEP_LENGTH + 1e-9;
        if !(self.gamma1 > 0.0 && self.gamma1 <= bound && self.gamma2 > 0.0 && self.gamma2 <= bound)
        {
            return Err(Error::BadConfig(format!(
                "step lengths must lie in (0, {MAX_STEP_LENGTH}]: gamma1={}, gamma2={}",
                self.gamma1, self.gamma2
            )));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::BadConfig(format!(
                "tolerance must be positive: {}",
                self.tol
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::BadConfig(alloc::string::String::from(
                "max_iters must be at least 1",
            )));
        }
        Ok(())
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

/// Data-driven defaults: `beta1 = 0.3 / mean|b_ij|`, `beta2 = 3 / mean|b_ij|`,
/// `gamma1 = gamma2 = 1.618`. Fails on identically zero data, where the
/// minimizer is simply `X = 0`.
pub fn default_config(b: &Mat) -> Result<AdmmConfig> {
    let mean = b.mean_abs();
    if mean == 0.0 {
        return Err(Error::ZeroData);
    }
    Ok(AdmmConfig {
        beta1: 0.3 / mean,
        beta2: 3.0 / mean,
        gamma1: 1.618,
        gamma2: 1.618,
        tol: DEFAULT_TOL,
        max_iters: DEFAULT_MAX_ITERS,
    })
}

/// Primal pair and multipliers carried between iterations (and between
/// outer stages, for warm starting).
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub x: Mat,
    pub z: Mat,
    pub lambda1: Mat,
    pub lambda2: Mat,
    pub iter: usize,
}

impl AdmmState {
    /// Cold start: everything zero.
    pub fn zeros(n: usize, l: usize, m: usize) -> Self {
        AdmmState {
            x: Mat::zeros(n, l),
            z: Mat::zeros(n, l),
            lambda1: Mat::zeros(n, l),
            lambda2: Mat::zeros(m, l),
            iter: 0,
        }
    }
}

/// Outcome of a solve.
#[derive(Debug, Clone)]
pub struct AdmmResult {
    /// final state; `state.x` is the solution (kept whole so outer stages
    /// can warm start from it)
    pub state: AdmmState,
    pub iters: usize,
    /// last value of the stopping metric
    pub final_rel_change: f64,
    /// `||A X - B||_F / ||B||_F` at termination (0 when `B = 0`)
    pub feasibility: f64,
    /// stopping metric per iteration
    pub stop_metric_trace: Vec<f64>,
}

impl AdmmResult {
    pub fn x(&self) -> &Mat {
        &self.state.x
    }
}

/// Strategy for the X-update linear system, fixed per solve.
enum XUpdate {
    /// rows orthonormal: multiply `A^T (A rhs)` by `beta2/(beta1+beta2)`
    Orthonormal { factor: f64 },
    /// general dense: solve `((beta1/beta2) I + A A^T) s = A rhs` once
    /// factored
    Factored { chol: Cholesky },
}

fn build_x_update(op: &MeasurementOperator, cfg: &AdmmConfig) -> Result<XUpdate> {
    let factor = cfg.beta2 / (cfg.beta1 + cfg.beta2);
    if op.rows_orthonormal_by_construction() {
        return Ok(XUpdate::Orthonormal { factor });
    }
    let a = op.materialize();
    let gram = a.matmul(&a.transpose())?;
    let m = gram.rows();
    let mut dev = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = libm::fabs(gram.get(i, j) - target);
            if d > dev {
                dev = d;
            }
        }
    }
    if dev <= 1e-12 {
        return Ok(XUpdate::Orthonormal { factor });
    }
    let mut g = gram;
    let shift = cfg.beta1 / cfg.beta2;
    for i in 0..m {
        g.set(i, i, g.get(i, i) + shift);
    }
    // beta1 > 0 makes the shifted Gram matrix positive definite
    let chol = Cholesky::new(&g)
        .ok_or_else(|| Error::BadConfig(alloc::string::String::from("singular X-update system")))?;
    Ok(XUpdate::Factored { chol })
}

/// One full ADMM sweep. `b` is the `m x l` data matrix, `w` the binary row
/// weights. Convenience wrapper that rebuilds per-solve caches; the solve
/// loop uses the internal variant.
pub fn admm_step(
    state: AdmmState,
    op: &MeasurementOperator,
    b: &Mat,
    w: &WeightVector,
    cfg: &AdmmConfig,
) -> Result<AdmmState> {
    cfg.validate()?;
    let xu = build_x_update(op, cfg)?;
    let atb = op.apply_adjoint(b)?;
    step_inner(state, op, b, w, cfg, &xu, &atb)
}

fn step_inner(
    mut state: AdmmState,
    op: &MeasurementOperator,
    b: &Mat,
    w: &WeightVector,
    cfg: &AdmmConfig,
    xu: &XUpdate,
    atb: &Mat,
) -> Result<AdmmState> {
    // (a) X-update: rhs = beta1 Z - L1 + beta2 A^T B + A^T L2
    let mut rhs = state.z.scaled(cfg.beta1);
    rhs.axpy(-1.0, &state.lambda1);
    rhs.axpy(cfg.beta2, atb);
    rhs.axpy(1.0, &op.apply_adjoint(&state.lambda2)?);
    let a_rhs = op.apply(&rhs)?;
    let s = match xu {
        XUpdate::Orthonormal { factor } => a_rhs.scaled(*factor),
        XUpdate::Factored { chol } => chol.solve(&a_rhs),
    };
    let mut x = rhs;
    x.axpy(-1.0, &op.apply_adjoint(&s)?);
    x.scale(1.0 / cfg.beta1);
    // A X = s / beta2 follows from the Woodbury algebra; reusing it saves a
    // transform per sweep. (G s = A rhs with G = (beta1/beta2) I + A A^T
    // gives A X = (1/beta1)(A rhs - A A^T s) = s / beta2.)
    let ax = s.scaled(1.0 / cfg.beta2);

    // (b) Z-update: row shrinkage of X + L1/beta1 with thresholds w/beta1
    let mut r = x.clone();
    r.axpy(1.0 / cfg.beta1, &state.lambda1);
    let thresholds: Vec<f64> = w.as_slice().iter().map(|&wi| wi / cfg.beta1).collect();
    let z = row_shrink(&r, &thresholds)?;

    // (c) multiplier for Z = X
    state.lambda1.axpy(-cfg.gamma1 * cfg.beta1, &z.sub(&x));
    // (d) multiplier for A X = B
    state.lambda2.axpy(-cfg.gamma2 * cfg.beta2, &ax.sub(b));

    state.x = x;
    state.z = z;
    state.iter += 1;
    Ok(state)
}

/// Runs ADMM until the relative row-norm change drops below `cfg.tol` or
/// `cfg.max_iters` sweeps have been taken. `warm_start` seeds the full
/// state from a previous solve (used across outer stages); otherwise the
/// solve starts from zero.
///
/// Stopping additionally requires the relative split residual
/// `||Z - X||_F / ||X||_F` to have decayed below `sqrt(tol)`. Early in a
/// cold-started run the shrinkage can zero out `Z` entirely while the
/// multipliers ramp up, leaving `X` exactly stationary for several sweeps
/// (with `beta2 = 10 beta1` the ramp terms cancel in the X-update); the
/// row-norm change alone would stop there, far from the minimizer.
pub fn solve_weighted_l21(
    op: &MeasurementOperator,
    b: &Mat,
    w: &WeightVector,
    cfg: &AdmmConfig,
    warm_start: Option<AdmmState>,
) -> Result<AdmmResult> {
    cfg.validate()?;
    let (m, n) = op.dims();
    if b.rows() != m {
        return Err(Error::ShapeMismatch {
            expected: (m, b.cols()),
            got: b.shape(),
        });
    }
    if w.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: w.len(),
        });
    }
    let l = b.cols();
    let mut state = match warm_start {
        Some(s) => {
            if s.x.shape() != (n, l) || s.lambda2.shape() != (m, l) {
                return Err(Error::ShapeMismatch {
                    expected: (n, l),
                    got: s.x.shape(),
                });
            }
            s
        }
        None => AdmmState::zeros(n, l, m),
    };

    let xu = build_x_update(op, cfg)?;
    let atb = op.apply_adjoint(b)?;

    let mut t_prev = row_norms(&state.x);
    let mut trace = Vec::new();
    let mut rel = f64::INFINITY;
    let mut iters = 0;
    let split_tol = libm::sqrt(cfg.tol);
    for k in 0..cfg.max_iters {
        state = step_inner(state, op, b, w, cfg, &xu, &atb)?;
        if !state.x.is_finite() {
            return Err(Error::Diverged { iter: k + 1 });
        }
        let t = row_norms(&state.x);
        let mut num = 0.0;
        let mut den = 0.0;
        for (a, b) in t.iter().zip(&t_prev) {
            num += (a - b) * (a - b);
            den += a * a;
        }
        rel = libm::sqrt(num) / libm::sqrt(den).max(f64::EPSILON);
        trace.push(rel);
        t_prev = t;
        iters = k + 1;
        if rel <= cfg.tol {
            let split = state.z.sub(&state.x).frob_norm() / state.x.frob_norm().max(f64::EPSILON);
            if split <= split_tol {
                break;
            }
        }
    }

    let bnorm = b.frob_norm();
    let feasibility = if bnorm == 0.0 {
        0.0
    } else {
        op.apply(&state.x)?.sub(b).frob_norm() / bnorm
    };
    Ok(AdmmResult {
        state,
        iters,
        final_rel_change: rel,
        feasibility,
        stop_metric_trace: trace,
    })
}
