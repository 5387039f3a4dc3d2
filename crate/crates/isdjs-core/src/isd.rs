//! Multi-stage iterative support detection for joint sparsity.
//!
//! Each stage solves the weighted l2,1 problem for the current binary
//! weights, then re-estimates the set of truly nonzero rows from the row
//! norms of the intermediate solution. Detected rows get weight 0 (no
//! shrinkage next stage), the rest keep weight 1. The detected set is *not*
//! forced to grow: a row detected at one stage may be dropped later, which
//! is what makes the loop robust to early false detections.
//!
//! Detection is threshold based. The default rule sorts the row norms in
//! ascending order and looks for the first gap wider than
//! `tau = ||t||_inf / m`; everything above that gap is declared nonzero.
//! Other detectors can be plugged in through [`SupportDetector`].

use alloc::vec::Vec;

use crate::admm::{default_config, solve_weighted_l21, AdmmConfig, AdmmState};
use crate::error::{Error, Result};
use crate::kernels::{row_norms, weighted_l21, WeightVector};
use crate::linops::MeasurementOperator;
use crate::mat::Mat;
use crate::metrics::{exact_support, rel_err, Quadruplet};

/// A set of row indices detected as truly nonzero. Indices are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn empty() -> Self {
        SupportSet {
            indices: Vec::new(),
        }
    }

    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        SupportSet { indices }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// Complement within `0..n`.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|i| !self.contains(*i)).collect()
    }

    /// Weights that drop the penalty on detected rows: `w_i = 0` on the
    /// support, 1 elsewhere.
    pub fn to_weights(&self, n: usize) -> WeightVector {
        WeightVector::zero_on(n, &self.indices)
    }
}

/// Pluggable threshold rule. `t` is the row-norm vector of the current
/// solution, `m` the (possibly fractional, for heterogeneous multi-task
/// data) measurement count, `stage` the 1-based stage index. Returning
/// `None` means no reliable threshold exists and no row is truncated.
pub trait SupportDetector {
    fn threshold(&self, t: &[f64], m: f64, stage: usize) -> Option<f64>;
}

/// The default "first significant jump" rule.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstSignificantJump;

impl SupportDetector for FirstSignificantJump {
    fn threshold(&self, t: &[f64], m: f64, _stage: usize) -> Option<f64> {
        first_significant_jump(t, m)
    }
}

/// Sorts `|t|` ascending and returns `t_(i)` for the smallest `i` with
/// `t_(i+1) - t_(i) > tau`, where `tau = ||t||_inf / m`. Returns `None` for
/// the zero vector or when no gap exceeds `tau` (e.g. a constant sequence).
pub fn first_significant_jump(t: &[f64], m: f64) -> Option<f64> {
    debug_assert!(m >= 1.0);
    if t.len() < 2 {
        return None;
    }
    let mut sorted: Vec<f64> = t.iter().map(|v| libm::fabs(*v)).collect();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("row norms are finite"));
    let max = *sorted.last().expect("nonempty");
    if max == 0.0 {
        return None;
    }
    let tau = max / m;
    for i in 0..sorted.len() - 1 {
        if sorted[i + 1] - sorted[i] > tau {
            return Some(sorted[i]);
        }
    }
    None
}

/// Rows with `t_i > eps` (strict).
pub fn detect_support(t: &[f64], eps: f64) -> SupportSet {
    debug_assert!(eps >= 0.0);
    SupportSet {
        indices: (0..t.len()).filter(|&i| t[i] > eps).collect(),
    }
}

/// Controls for the multi-stage run.
#[derive(Debug, Clone, Copy)]
pub struct IsdjsConfig {
    /// outer-stage cap (the run may stop earlier when the detected support
    /// repeats between consecutive stages)
    pub max_stages: usize,
    /// loose tolerance for intermediate stages; a rough solution is enough
    /// for support detection
    pub intermediate_tol: f64,
    /// tolerance for the last solve
    pub final_tol: f64,
    /// inner-solver override; `None` derives penalties from the data
    pub admm: Option<AdmmConfig>,
}

impl Default for IsdjsConfig {
    fn default() -> Self {
        IsdjsConfig {
            max_stages: 5,
            intermediate_tol: 1e-2,
            final_tol: 1e-6,
            admm: None,
        }
    }
}

impl IsdjsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_stages == 0 {
            return Err(Error::BadConfig(alloc::string::String::from(
                "max_stages must be at least 1",
            )));
        }
        if !(self.intermediate_tol > 0.0 && self.final_tol > 0.0) {
            return Err(Error::BadConfig(alloc::string::String::from(
                "tolerances must be positive",
            )));
        }
        Ok(())
    }
}

/// Everything recorded about one stage.
#[derive(Debug, Clone)]
pub struct StageTrace {
    /// 1-based stage index
    pub stage: usize,
    /// stopping tolerance the stage ran at
    pub tol: f64,
    pub inner_iters: usize,
    /// last value of the inner stopping metric
    pub rel_change: f64,
    /// row norms of the stage solution
    pub row_norms: Vec<f64>,
    /// detector output on those row norms
    pub threshold: Option<f64>,
    /// rows detected as nonzero from this stage's solution
    pub support: SupportSet,
    /// detection accuracy vs. ground truth, when one was supplied
    pub quadruplet: Option<Quadruplet>,
    /// relative error vs. ground truth, when one was supplied
    pub rel_err: Option<f64>,
    /// weighted l2,1 value of the stage solution under the weights the
    /// stage was solved with
    pub objective: f64,
}

/// Final solution plus the per-stage trace.
#[derive(Debug, Clone)]
pub struct IsdjsResult {
    pub x: Mat,
    pub stages: Vec<StageTrace>,
    /// staged-objective values recorded by the frozen-detection mode of the
    /// multi-task runner; `None` for compressive-sensing runs
    pub frozen_objectives: Option<Vec<f64>>,
}

impl IsdjsResult {
    pub fn final_stage(&self) -> &StageTrace {
        self.stages.last().expect("at least one stage")
    }
}

/// Runs the multi-stage loop on measurements `b` under operator `op`.
///
/// Stage `s` solves the weighted problem for the weights derived at stage
/// `s-1` (all ones initially), warm-starting the inner ADMM from the
/// previous stage's full state. Intermediate stages run at the loose
/// tolerance, the final stage at `final_tol`. If the detected support
/// repeats exactly between consecutive stages the loop stops early after
/// one polishing solve at `final_tol`.
///
/// `ground_truth`, when given, fills the per-stage quadruplet and relative
/// error fields of the trace.
pub fn run_isdjs(
    op: &MeasurementOperator,
    b: &Mat,
    cfg: &IsdjsConfig,
    detector: &dyn SupportDetector,
    ground_truth: Option<&Mat>,
) -> Result<IsdjsResult> {
    cfg.validate()?;
    let (m, n) = op.dims();
    let base = match cfg.admm {
        Some(c) => c,
        None => default_config(b)?,
    };
    let truth_support: Option<Vec<usize>> = ground_truth.map(exact_support);

    let make_trace =
        |stage: usize, tol: f64, solved: &crate::admm::AdmmResult, weights: &WeightVector| {
            let t = row_norms(solved.x());
            let threshold = detector.threshold(&t, m as f64, stage);
            let support = match threshold {
                Some(eps) => detect_support(&t, eps),
                None => SupportSet::empty(),
            };
            let trace = StageTrace {
                stage,
                tol,
                inner_iters: solved.iters,
                rel_change: solved.final_rel_change,
                row_norms: t,
                threshold,
                support: support.clone(),
                quadruplet: truth_support
                    .as_deref()
                    .map(|ts| Quadruplet::from_sets(support.indices(), ts)),
                rel_err: ground_truth.map(|xt| rel_err(solved.x(), xt)),
                objective: weighted_l21(solved.x(), weights).expect("lengths agree"),
            };
            (trace, support)
        };

    let mut weights = WeightVector::ones(n);
    let mut warm: Option<AdmmState> = None;
    let mut prev_support: Option<SupportSet> = None;
    let mut stages: Vec<StageTrace> = Vec::new();
    let mut x_final: Option<Mat> = None;

    let mut stage = 1;
    while stage <= cfg.max_stages {
        let last = stage == cfg.max_stages;
        let tol = if last {
            cfg.final_tol
        } else {
            cfg.intermediate_tol
        };
        let solved = solve_weighted_l21(op, b, &weights, &base.with_tol(tol), warm.take())
            .map_err(|e| annotate(e, stage))?;
        let (trace, support) = make_trace(stage, tol, &solved, &weights);
        stages.push(trace);
        x_final = Some(solved.state.x.clone());
        warm = Some(solved.state);

        let repeated = prev_support.as_ref() == Some(&support);
        prev_support = Some(support.clone());
        weights = support.to_weights(n);

        if repeated && !last {
            // support reached a fixed point: one polishing solve at the
            // tight tolerance, then stop
            let polished =
                solve_weighted_l21(op, b, &weights, &base.with_tol(cfg.final_tol), warm.take())
                    .map_err(|e| annotate(e, stage + 1))?;
            let (trace, _) = make_trace(stage + 1, cfg.final_tol, &polished, &weights);
            stages.push(trace);
            x_final = Some(polished.state.x);
            break;
        }
        stage += 1;
    }

    Ok(IsdjsResult {
        x: x_final.expect("at least one stage ran"),
        stages,
        frozen_objectives: None,
    })
}

fn annotate(e: Error, stage: usize) -> Error {
    match e {
        Error::Diverged { iter } => Error::StageDiverged { stage, iter },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::synth::{gen_row_sparse, SignalKind};
    use alloc::vec;

    #[test]
    fn jump_rule_worked_example() {
        // sorted: (0, 0.01, 0.02, 1.0, 1.1), m = 10 -> tau = 0.11,
        // first gap above tau is 1.0 - 0.02, so eps = 0.02
        let t = vec![1.0, 0.01, 0.0, 1.1, 0.02];
        let eps = first_significant_jump(&t, 10.0);
        assert_eq!(eps, Some(0.02));
    }

    #[test]
    fn jump_rule_zero_vector_is_none() {
        assert_eq!(first_significant_jump(&[0.0, 0.0, 0.0], 4.0), None);
    }

    #[test]
    fn jump_rule_constant_sequence_is_none() {
        assert_eq!(first_significant_jump(&[0.7, 0.7, 0.7, 0.7], 4.0), None);
    }

    #[test]
    fn jump_rule_ties_never_jump() {
        // equal consecutive values give zero difference; the jump must be
        // found after the tied block
        let t = vec![0.01, 0.01, 0.01, 2.0];
        assert_eq!(first_significant_jump(&t, 8.0), Some(0.01));
    }

    #[test]
    fn detect_support_is_strict() {
        let t = vec![0.5, 0.01, 0.6];
        let s = detect_support(&t, 0.02);
        assert_eq!(s.indices(), &[0, 2]);
        // threshold at the max keeps nothing
        assert!(detect_support(&t, 0.6).is_empty());
        // zero threshold keeps everything positive
        assert_eq!(detect_support(&t, 0.0).indices(), &[0, 1, 2]);
    }

    #[test]
    fn support_weights_are_dual() {
        let s = SupportSet::new(vec![3, 1]);
        let w = s.to_weights(5);
        assert_eq!(w.as_slice(), &[1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(s.complement(5), vec![0, 2, 4]);
    }

    #[test]
    fn single_stage_equals_plain_solver() {
        let op = MeasurementOperator::make_pwh(32, 16, 11).unwrap();
        let x_true = gen_row_sparse(32, 2, 4, SignalKind::Gaussian, 77).unwrap();
        let b = op.apply(&x_true).unwrap();
        let cfg = IsdjsConfig {
            max_stages: 1,
            ..IsdjsConfig::default()
        };
        let staged = run_isdjs(&op, &b, &cfg, &FirstSignificantJump, None).unwrap();
        let direct = solve_weighted_l21(
            &op,
            &b,
            &WeightVector::ones(32),
            &default_config(&b).unwrap().with_tol(cfg.final_tol),
            None,
        )
        .unwrap();
        assert_eq!(staged.x.as_slice(), direct.x().as_slice());
        assert_eq!(staged.stages.len(), 1);
    }

    struct NeverDetect;
    impl SupportDetector for NeverDetect {
        fn threshold(&self, _t: &[f64], _m: f64, _stage: usize) -> Option<f64> {
            None
        }
    }

    #[test]
    fn no_detection_reduces_to_plain_l21() {
        let op = MeasurementOperator::make_pwh(32, 20, 5).unwrap();
        let x_true = gen_row_sparse(32, 2, 3, SignalKind::Gaussian, 13).unwrap();
        let b = op.apply(&x_true).unwrap();
        let cfg = IsdjsConfig::default();
        let staged = run_isdjs(&op, &b, &cfg, &NeverDetect, Some(&x_true)).unwrap();
        // empty support repeats at stage 2, so: two loose stages + polish
        assert_eq!(staged.stages.len(), 3);
        assert!(staged.stages.iter().all(|s| s.support.is_empty()));
        let direct = solve_weighted_l21(
            &op,
            &b,
            &WeightVector::ones(32),
            &default_config(&b).unwrap().with_tol(cfg.final_tol),
            None,
        )
        .unwrap();
        let diff = staged.x.sub(direct.x()).frob_norm() / direct.x().frob_norm();
        assert!(diff <= 1e-3, "diff={diff}");
    }

    /// Scripted detector: stage 1 deliberately over-detects (tiny
    /// threshold), later stages use the jump rule. The false rows must be
    /// dropped without errors.
    struct OverDetectThenJump;
    impl SupportDetector for OverDetectThenJump {
        fn threshold(&self, t: &[f64], m: f64, stage: usize) -> Option<f64> {
            if stage == 1 {
                let max = t.iter().fold(0.0f64, |a, &b| a.max(b));
                Some(max * 1e-6)
            } else {
                first_significant_jump(t, m)
            }
        }
    }

    #[test]
    fn self_correction_drops_false_detections() {
        let op = MeasurementOperator::make_pwh(64, 32, 3).unwrap();
        let x_true = gen_row_sparse(64, 3, 5, SignalKind::Gaussian, 29).unwrap();
        let b = op.apply(&x_true).unwrap();
        let cfg = IsdjsConfig::default();
        let res = run_isdjs(&op, &b, &cfg, &OverDetectThenJump, Some(&x_true)).unwrap();
        let first = &res.stages[0];
        let later = res.stages.last().unwrap();
        // stage 1 over-detected...
        assert!(first.quadruplet.unwrap().false_alarms > 0);
        // ...and a later stage is not a superset of it
        assert!(later.support.len() < first.support.len());
        assert!(later.quadruplet.unwrap().false_alarms == 0);
        assert!(later.rel_err.unwrap() <= 1e-3);
    }

    #[test]
    fn stage_trace_weight_duality() {
        let op = MeasurementOperator::make_pwh(32, 16, 8).unwrap();
        let x_true = gen_row_sparse(32, 4, 4, SignalKind::Gaussian, 55).unwrap();
        let b = op.apply(&x_true).unwrap();
        let res = run_isdjs(
            &op,
            &b,
            &IsdjsConfig::default(),
            &FirstSignificantJump,
            None,
        )
        .unwrap();
        for tr in &res.stages {
            let w = tr.support.to_weights(32);
            for i in 0..32 {
                let zero = w.as_slice()[i] == 0.0;
                assert_eq!(zero, tr.support.contains(i));
            }
        }
    }

    #[test]
    fn zero_data_error_propagates() {
        let op = MeasurementOperator::make_pwh(8, 4, 0).unwrap();
        let b = Mat::zeros(4, 1);
        let err = run_isdjs(
            &op,
            &b,
            &IsdjsConfig::default(),
            &FirstSignificantJump,
            None,
        )
        .unwrap_err();
        assert_eq!(err, Error::ZeroData);
    }

    #[test]
    fn recovers_where_single_stage_fails() {
        // moderately hard instance: the plain model leaves visible error,
        // the staged loop drives it down
        let mut any_improved = false;
        for seed in 0..3u64 {
            let mut rng = SplitMix64::new(900 + seed);
            let op = MeasurementOperator::make_pwh(128, 32, rng.next_u64()).unwrap();
            let x_true = gen_row_sparse(128, 4, 10, SignalKind::Gaussian, rng.next_u64()).unwrap();
            let b = op.apply(&x_true).unwrap();
            let res = run_isdjs(
                &op,
                &b,
                &IsdjsConfig::default(),
                &FirstSignificantJump,
                Some(&x_true),
            )
            .unwrap();
            let first = res.stages[0].rel_err.unwrap();
            let last = res.final_stage().rel_err.unwrap();
            if last < first * 0.5 {
                any_improved = true;
            }
            assert!(
                last <= first + 1e-6,
                "staging must not hurt: {first} -> {last}"
            );
        }
        assert!(any_improved);
    }
}
