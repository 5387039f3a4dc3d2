//! Loading multi-task data from a directory: a `manifest.json` naming the
//! per-task CSV pairs, plus optional settings.
//!
//! ```json
//! {
//!   "tasks": [
//!     { "a": "A_1.csv", "b": "b_1.csv" },
//!     { "a": "A_2.csv", "b": "b_2.csv" }
//!   ],
//!   "rho": 0.0464
//! }
//! ```
//!
//! Each `A_j.csv` is an `m_j x n` design matrix, each `b_j.csv` a single
//! column (or single row) of `m_j` responses.

use std::path::Path;

use serde::{Deserialize, Serialize};

use isdjs_core::multitask::TaskData;

use crate::io::read_csv_matrix;
use crate::CliError;

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestTask {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tasks: Vec<ManifestTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

/// Reads `manifest.json` in `dir` and loads every task pair.
pub fn load_task_data(dir: &Path) -> Result<(TaskData, Option<f64>), CliError> {
    let manifest_path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&manifest_path)?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", manifest_path.display())))?;
    if manifest.tasks.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no tasks listed",
            manifest_path.display()
        )));
    }
    let mut tasks = Vec::with_capacity(manifest.tasks.len());
    for entry in &manifest.tasks {
        let a = read_csv_matrix(&dir.join(&entry.a))?;
        let b_mat = read_csv_matrix(&dir.join(&entry.b))?;
        // accept a column vector or a single row
        let b: Vec<f64> = if b_mat.cols() == 1 {
            b_mat.as_slice().to_vec()
        } else if b_mat.rows() == 1 {
            b_mat.row(0).to_vec()
        } else {
            return Err(CliError::Config(format!(
                "{}: response must be a vector, got {}x{}",
                entry.b,
                b_mat.rows(),
                b_mat.cols()
            )));
        };
        tasks.push((a, b));
    }
    let data =
        TaskData::new(tasks).map_err(|e| CliError::Config(format!("{}: {e}", dir.display())))?;
    Ok((data, manifest.rho))
}
