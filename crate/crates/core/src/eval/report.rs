use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{FeatureMatrix, Label};
use crate::error::{invalid, Error, Result};
use crate::eval::grid::{Hyper, Method};

/// Outcome of one train/test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub split: usize,
    /// Hyperparameters of each fitted model; one entry unless the run is an ensemble.
    pub chosen: Vec<Hyper>,
    /// Best validation accuracy in percent, when a validation set was used.
    pub val_acc: Option<f64>,
    /// Test accuracy in percent.
    pub test_acc: f64,
    pub test_idx: Vec<usize>,
    pub predictions: Vec<Label>,
}

/// Mean accuracy of one ensemble member across splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSummary {
    pub name: String,
    pub mean_acc: f64,
    pub std_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub method: Method,
    pub config_digest: String,
    pub per_split: Vec<SplitResult>,
    /// Percent.
    pub mean_acc: f64,
    /// Population std, percent.
    pub std_acc: f64,
    /// Per-member accuracies of an ensemble; empty otherwise.
    pub members: Vec<MemberSummary>,
    /// SVM fits whose invariants were verified during the run.
    pub svm_fits_checked: usize,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the JSON serialization of `config`.
pub fn config_digest<T: Serialize + ?Sized>(config: &T) -> Result<String> {
    let text = serde_json::to_vec(config)?;
    Ok(hex(&Sha256::digest(&text)))
}

/// SHA-256 over the feature values and labels of a matrix.
pub fn data_digest(data: &FeatureMatrix) -> String {
    let mut h = Sha256::new();
    h.update((data.n_rows() as u64).to_le_bytes());
    h.update((data.n_cols() as u64).to_le_bytes());
    for v in data.values() {
        h.update(v.to_le_bytes());
    }
    for l in data.labels() {
        h.update(l.to_string().as_bytes());
    }
    hex(&h.finalize())
}

impl ExperimentReport {
    pub(crate) fn assemble(
        name: String,
        method: Method,
        config_digest: String,
        per_split: Vec<SplitResult>,
        members: Vec<MemberSummary>,
        svm_fits_checked: usize,
    ) -> Self {
        let accs: Vec<f64> = per_split.iter().map(|s| s.test_acc).collect();
        let (mean_acc, std_acc) = mean_std(&accs);
        Self {
            name,
            method,
            config_digest,
            per_split,
            mean_acc,
            std_acc,
            members,
            svm_fits_checked,
        }
    }

    /// Recomputes mean and std from the per-split rows and compares.
    pub fn check_consistency(&self) -> Result<()> {
        let accs: Vec<f64> = self.per_split.iter().map(|s| s.test_acc).collect();
        let (m, s) = mean_std(&accs);
        if (m - self.mean_acc).abs() > 1e-9 || (s - self.std_acc).abs() > 1e-9 {
            return Err(Error::Numerical(format!(
                "report says {:.6} ± {:.6}, per-split rows give {m:.6} ± {s:.6}",
                self.mean_acc, self.std_acc
            )));
        }
        Ok(())
    }

    /// Most frequently chosen hyperparameters of the first model; ties go to
    /// the choice that appeared first.
    pub fn modal_hyper(&self) -> Result<Hyper> {
        let mut counts: Vec<(String, Hyper, usize)> = Vec::new();
        for s in &self.per_split {
            let h = s
                .chosen
                .first()
                .ok_or_else(|| invalid("split without chosen hyperparameters"))?;
            let key = h.key();
            match counts.iter_mut().find(|(k, _, _)| *k == key) {
                Some(entry) => entry.2 += 1,
                None => counts.push((key, *h, 1)),
            }
        }
        let mut best: Option<&(String, Hyper, usize)> = None;
        for c in &counts {
            if best.is_none_or(|b| c.2 > b.2) {
                best = Some(c);
            }
        }
        best.map(|b| b.1).ok_or_else(|| invalid("report has no splits"))
    }

    pub fn summary(&self) -> String {
        format!("{}: {:.2} ± {:.2}", self.name, self.mean_acc, self.std_acc)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    /// One row per split: split, chosen (JSON), val_acc, test_acc.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::InvalidArgument(format!("{other:?}")),
        })?;
        w.write_record(["split", "chosen", "val_acc", "test_acc"])?;
        for s in &self.per_split {
            let chosen = serde_json::to_string(&s.chosen)?;
            let val = s.val_acc.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([s.split.to_string(), chosen, val, s.test_acc.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}
