//! File interchange: dense matrices as headerless row-major CSV ('.'
//! decimal separator), partial Walsh-Hadamard operators as a small JSON
//! descriptor reconstructed deterministically from its seed, and JSON
//! stage traces for solver runs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use isdjs_core::isd::IsdjsResult;
use isdjs_core::linops::MeasurementOperator;
use isdjs_core::mat::Mat;
use isdjs_core::metrics::Quadruplet;

use crate::CliError;

/// Reads a headerless CSV of floats into a matrix; every line must have
/// the same number of comma-separated fields.
pub fn read_csv_matrix(path: &Path) -> Result<Mat, CliError> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match row {
            Ok(r) => rows.push(r),
            Err(e) => {
                return Err(CliError::Config(format!(
                    "{}:{}: bad number: {e}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Mat::from_rows(&rows).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Writes a matrix as headerless CSV, one row per line.
pub fn write_csv_matrix(path: &Path, m: &Mat) -> Result<(), CliError> {
    let mut out = String::new();
    for r in 0..m.rows() {
        let fields: Vec<String> = m.row(r).iter().map(|v| format!("{v}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Serialized form of a pwh operator; reconstruction from the seed is
/// bit-exact.
#[derive(Debug, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kind: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

pub fn write_operator_json(path: &Path, op: &MeasurementOperator) -> Result<(), CliError> {
    let (m, n) = op.dims();
    let seed = op
        .seed()
        .ok_or_else(|| CliError::Config("only pwh operators serialize to JSON".into()))?;
    let spec = OperatorSpec {
        kind: "pwh".into(),
        n,
        m,
        seed,
    };
    fs::write(
        path,
        serde_json::to_string_pretty(&spec).expect("serializable"),
    )?;
    Ok(())
}

pub fn read_operator_json(path: &Path) -> Result<MeasurementOperator, CliError> {
    let text = fs::read_to_string(path)?;
    let spec: OperatorSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if spec.kind != "pwh" {
        return Err(CliError::Config(format!(
            "{}: unknown operator kind '{}'",
            path.display(),
            spec.kind
        )));
    }
    Ok(MeasurementOperator::make_pwh(spec.n, spec.m, spec.seed)?)
}

/// Loads an operator by file extension: `.json` for pwh descriptors,
/// anything else is parsed as a dense CSV matrix.
pub fn load_operator(path: &Path) -> Result<MeasurementOperator, CliError> {
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        read_operator_json(path)
    } else {
        Ok(MeasurementOperator::from_mat(read_csv_matrix(path)?))
    }
}

/// One stage of a run, as written to `trace.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct StageJson {
    pub stage: usize,
    pub tol: f64,
    pub inner_iters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub detected: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct: Option<usize>,
    #[serde(rename = "false", skip_serializing_if = "Option::is_none")]
    pub false_alarms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_err: Option<f64>,
    pub objective: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TraceJson {
    pub algo: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub stages: Vec<StageJson>,
}

impl TraceJson {
    pub fn from_result(algo: &str, res: &IsdjsResult) -> Self {
        let stages = res
            .stages
            .iter()
            .map(|s| {
                let q: Option<&Quadruplet> = s.quadruplet.as_ref();
                StageJson {
                    stage: s.stage,
                    tol: s.tol,
                    inner_iters: s.inner_iters,
                    threshold: s.threshold,
                    detected: s.support.len(),
                    total: q.map(|q| q.total),
                    correct: q.map(|q| q.correct),
                    false_alarms: q.map(|q| q.false_alarms),
                    rel_err: s.rel_err,
                    objective: s.objective,
                }
            })
            .collect();
        TraceJson {
            algo: algo.to_string(),
            notes: None,
            stages,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(
            path,
            serde_json::to_string_pretty(self).expect("serializable"),
        )?;
        Ok(())
    }
}
