use serde::{Deserialize, Serialize};

use crate::classifiers::{accuracy, svm_fit, svm_predict, SvmParams};
use crate::data::{FeatureMatrix, Label, Split};
use crate::error::{dim, invalid, Result};
use crate::eval::ensemble::majority_vote;
use crate::eval::report::{config_digest, data_digest};
use crate::kernels::{gram_cross, gram_symmetric, pair_seed, ExecutionMode, KernelParams};
use crate::sim::{CircuitSpec, NoiseModel};

/// Results of one circuit in the noise study. Accuracies are in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEntry {
    pub n_qubits: usize,
    pub bandwidth: f64,
    pub exact_acc: f64,
    /// Noiseless shot-sampled kernel.
    pub baseline_acc: f64,
    pub run_accs: Vec<f64>,
    pub run_seeds: Vec<u64>,
    pub median_run_acc: f64,
    pub majority_acc: f64,
    pub majority_predictions: Vec<Label>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseStudyReport {
    pub config_digest: String,
    pub noise: NoiseModel,
    pub svm: SvmParams,
    pub n_runs: usize,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
    pub entries: Vec<NoiseEntry>,
}

impl NoiseStudyReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Seed of noisy run `r`.
pub fn run_seed(base: u64, r: usize) -> u64 {
    pair_seed(base ^ 0x0015_E5EE_D000_0000, r, r)
}

/// Exact, shot-sampled and `n_runs` noisy kernels for each circuit on one
/// train/test split, with a majority vote over the noisy runs. The baseline
/// and every noisy run use `noise.shots` shots per kernel entry.
pub fn noise_study(
    data: &FeatureMatrix,
    specs: &[CircuitSpec],
    noise: &NoiseModel,
    n_runs: usize,
    split: &Split,
    svm: SvmParams,
) -> Result<NoiseStudyReport> {
    if n_runs == 0 {
        return Err(invalid("noise study needs at least one run"));
    }
    noise.validate()?;
    let train = split.train_val();
    let test = split.test.clone();
    if train.is_empty() || test.is_empty() {
        return Err(invalid("degenerate split: empty training or test set"));
    }
    if let Some(&bad) = train.iter().chain(&test).find(|&&i| i >= data.n_rows()) {
        return Err(dim(format!("split index {bad} beyond {} samples", data.n_rows())));
    }
    let digest = config_digest(&serde_json::json!({
        "kind": "noise_study",
        "specs": specs,
        "noise": noise,
        "n_runs": n_runs,
        "train": train,
        "test": test,
        "svm": svm,
        "data": data_digest(data),
    }))?;

    let tr = data.select_rows(&train);
    let te = data.select_rows(&test);
    let y_train = tr.labels().to_vec();
    let truth = te.labels().to_vec();
    let evaluate = |spec: &CircuitSpec, mode: ExecutionMode| -> Result<Vec<Label>> {
        let kernel = KernelParams::quantum(spec.clone()).resolve(&tr, mode)?;
        let g_train = gram_symmetric(&tr, &train, &kernel)?;
        let g_test = gram_cross(&te, &test, &tr, &train, &kernel)?;
        let model = svm_fit(&g_train, &y_train, svm)?;
        model.check_invariants()?;
        svm_predict(&model, &g_test)
    };
    let pct = |pred: &[Label]| 100.0 * accuracy(pred, &truth);

    let mut entries = Vec::with_capacity(specs.len());
    for spec in specs {
        if spec.n_params != data.n_cols() {
            return Err(dim(format!(
                "circuit takes {} features, data has {}",
                spec.n_params,
                data.n_cols()
            )));
        }
        let exact_acc = pct(&evaluate(spec, ExecutionMode::Exact)?);
        let baseline = evaluate(
            spec,
            ExecutionMode::Shots {
                shots: noise.shots,
                seed: noise.seed,
            },
        )?;
        let run_seeds: Vec<u64> = (0..n_runs).map(|r| run_seed(noise.seed, r)).collect();
        let runs: Vec<Vec<Label>> = run_seeds
            .iter()
            .map(|&seed| {
                evaluate(
                    spec,
                    ExecutionMode::Noisy {
                        noise: noise.with_seed(seed),
                    },
                )
            })
            .collect::<Result<_>>()?;
        let run_accs: Vec<f64> = runs.iter().map(|p| pct(p)).collect();
        let majority_predictions = majority_vote(&runs)?;
        entries.push(NoiseEntry {
            n_qubits: spec.n_qubits,
            bandwidth: spec.bandwidth,
            exact_acc,
            baseline_acc: pct(&baseline),
            median_run_acc: median(&run_accs),
            majority_acc: pct(&majority_predictions),
            run_accs,
            run_seeds,
            majority_predictions,
        });
    }
    Ok(NoiseStudyReport {
        config_digest: digest,
        noise: *noise,
        svm,
        n_runs,
        train_idx: train,
        test_idx: test,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn run_seeds_distinct() {
        let s: std::collections::BTreeSet<u64> = (0..100).map(|r| run_seed(7, r)).collect();
        assert_eq!(s.len(), 100);
    }
}
