//! Benchmark configuration: the experiment spec, parsed from TOML or JSON.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use isdjs_core::synth::SignalKind;

use crate::CliError;

/// Algorithms the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    /// the multi-stage detect-and-reweight solver
    Isdjs,
    /// the plain l2,1 model (single weighted solve, all-ones weights)
    L21,
    /// simultaneous orthogonal matching pursuit, oracle sparsity
    Somp,
    /// one-shot correlation thresholding, oracle sparsity
    Pthresh,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Isdjs => "isdjs",
            Algo::L21 => "l21",
            Algo::Somp => "somp",
            Algo::Pthresh => "pthresh",
        }
    }

    pub fn parse(s: &str) -> Result<Algo, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "isdjs" => Ok(Algo::Isdjs),
            "l21" => Ok(Algo::L21),
            "somp" => Ok(Algo::Somp),
            "pthresh" => Ok(Algo::Pthresh),
            other => Err(CliError::Config(format!(
                "unknown algorithm '{other}' (expected isdjs, l21, somp, pthresh)"
            ))),
        }
    }

    /// Comma-separated list, e.g. `isdjs,l21`.
    pub fn parse_list(s: &str) -> Result<Vec<Algo>, CliError> {
        s.split(',').map(Algo::parse).collect()
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Signal families for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signal {
    Gaussian,
    Bernoulli,
    /// channel-occupancy scenario (`X = H G^T`, positive gains)
    Spectrum,
}

impl Signal {
    pub fn name(self) -> &'static str {
        match self {
            Signal::Gaussian => "gaussian",
            Signal::Bernoulli => "bernoulli",
            Signal::Spectrum => "spectrum",
        }
    }

    /// The row-entry distribution for the plain generator; `None` for the
    /// structured spectrum scenario.
    pub fn kind(self) -> Option<SignalKind> {
        match self {
            Signal::Gaussian => Some(SignalKind::Gaussian),
            Signal::Bernoulli => Some(SignalKind::Bernoulli),
            Signal::Spectrum => None,
        }
    }
}

/// A benchmark specification. Sweeps run over the cartesian product of
/// `l`, `k`, `m` and `noise`; every (point, trial) pair derives its own
/// seeds, so the outcome is a pure function of this struct.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// signal dimension (rows of X)
    pub n: usize,
    /// measurement counts to sweep
    pub m: Vec<usize>,
    /// channel counts to sweep
    pub l: Vec<usize>,
    /// sparsity levels to sweep
    pub k: Vec<usize>,
    pub signal: Signal,
    /// relative noise levels (Frobenius fraction), 0 = noiseless
    pub noise: Vec<f64>,
    pub trials: usize,
    /// a trial counts as recovered when rel. error is at or below this
    pub success_threshold: f64,
    pub algos: Vec<Algo>,
    pub seed: u64,
    /// outer-stage cap for isdjs
    pub max_stages: usize,
    pub intermediate_tol: f64,
    pub final_tol: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            n: 1024,
            m: vec![256],
            l: vec![4],
            k: vec![80, 100, 120, 140, 160],
            signal: Signal::Gaussian,
            noise: vec![0.0],
            trials: 100,
            success_threshold: 1e-3,
            algos: vec![Algo::Isdjs, Algo::L21],
            seed: 0,
            max_stages: 5,
            intermediate_tol: 1e-2,
            final_tol: 1e-6,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n == 0 {
            return Err(CliError::Config("n must be positive".into()));
        }
        for list in [&self.m, &self.l, &self.k] {
            if list.is_empty() {
                return Err(CliError::Config("sweep lists must be nonempty".into()));
            }
        }
        if self.noise.is_empty() {
            return Err(CliError::Config("noise list must be nonempty".into()));
        }
        if self.noise.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(CliError::Config("noise levels must be nonnegative".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if !self.success_threshold.is_finite() || self.success_threshold <= 0.0 {
            return Err(CliError::Config(
                "success_threshold must be positive".into(),
            ));
        }
        if self.algos.is_empty() {
            return Err(CliError::Config("algorithm list must be nonempty".into()));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if self.max_stages == 0 || !positive(self.intermediate_tol) || !positive(self.final_tol) {
            return Err(CliError::Config(
                "max_stages and tolerances must be positive".into(),
            ));
        }
        for &m in &self.m {
            if m == 0 || m > self.n {
                return Err(CliError::Config(format!(
                    "m={m} out of range for n={}",
                    self.n
                )));
            }
        }
        for &k in &self.k {
            if k > self.n {
                return Err(CliError::Config(format!("k={k} exceeds n={}", self.n)));
            }
        }
        for &l in &self.l {
            if l == 0 {
                return Err(CliError::Config("l must be positive".into()));
            }
        }
        Ok(())
    }

    /// Parses a spec from TOML (default) or JSON (`.json` extension).
    pub fn from_file(path: &Path) -> Result<ExperimentSpec, CliError> {
        let text = std::fs::read_to_string(path)?;
        let spec: ExperimentSpec = if path.extension().and_then(|e| e.to_str()) == Some("json") {
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        };
        spec.validate()?;
        Ok(spec)
    }
}
