use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use crate::classifiers::{
    accuracy, knn_predict, svm_fit, svm_predict, tree_fit, tree_predict, KnnModel, Splitter, SvmParams,
    TreeLimits,
};
use crate::data::{FeatureMatrix, Label, Preprocessor, Split, SplitPlan};
use crate::error::{dim, invalid, Result};
use crate::eval::grid::{GridSpec, Hyper, Method, SplitterKind};
use crate::eval::report::{config_digest, data_digest, ExperimentReport, SplitResult};
use crate::kernels::{gram_cross, gram_symmetric, pair_seed, ExecutionMode, GramMatrix, KernelParams};
use crate::sim::build_ansatz;

/// Fits models of one method on row subsets of a fixed data matrix.
///
/// Quantum Gram matrices over all rows are computed once per bandwidth, so
/// every split and grid point reads from the same cache.
pub struct Learner {
    data: FeatureMatrix,
    method: Method,
    grams: Vec<(f64, GramMatrix)>,
    svm_fits: AtomicUsize,
}

impl Learner {
    pub fn new(data: FeatureMatrix, method: Method, points: &[Hyper]) -> Result<Self> {
        let mut grams: Vec<(f64, GramMatrix)> = Vec::new();
        if let Method::Qsvc { n_qubits, mode } = method {
            let ids: Vec<usize> = (0..data.n_rows()).collect();
            for h in points {
                let Hyper::Qsvc { bandwidth, .. } = *h else {
                    return Err(invalid("QSVC learner given non-QSVC hyperparameters"));
                };
                if grams.iter().any(|(b, _)| *b == bandwidth) {
                    continue;
                }
                let circuit = build_ansatz(n_qubits, data.n_cols(), bandwidth)?;
                let kernel = KernelParams::quantum(circuit).resolve(&data, mode)?;
                grams.push((bandwidth, gram_symmetric(&data, &ids, &kernel)?));
            }
        }
        Ok(Self {
            data,
            method,
            grams,
            svm_fits: AtomicUsize::new(0),
        })
    }

    pub fn data(&self) -> &FeatureMatrix {
        &self.data
    }

    /// Number of SVM fits so far; each one passed its invariant check.
    pub fn svm_fits_checked(&self) -> usize {
        self.svm_fits.load(Ordering::Relaxed)
    }

    fn checked_svm(&self, gram: &GramMatrix, labels: &[Label], params: SvmParams) -> Result<crate::classifiers::SvmModel> {
        let model = svm_fit(gram, labels, params)?;
        model.check_invariants()?;
        self.svm_fits.fetch_add(1, Ordering::Relaxed);
        Ok(model)
    }

    /// Fits on `train` and predicts `test` (indices into the data matrix).
    /// `seed` drives the random tree splitter.
    pub fn fit_predict(&self, hyper: &Hyper, train: &[usize], test: &[usize], seed: u64) -> Result<Vec<Label>> {
        if train.is_empty() || test.is_empty() {
            return Err(invalid("degenerate split: empty training or test set"));
        }
        let labels: Vec<Label> = train.iter().map(|&i| self.data.labels()[i]).collect();
        match (*hyper, self.method) {
            (Hyper::Svc { kernel, c, gamma, tol }, Method::Svc) => {
                let tr = self.data.select_rows(train);
                let te = self.data.select_rows(test);
                let k = KernelParams::classical(kernel, gamma).resolve(&tr, ExecutionMode::Exact)?;
                let g_train = gram_symmetric(&tr, train, &k)?;
                let g_test = gram_cross(&te, test, &tr, train, &k)?;
                let model = self.checked_svm(&g_train, &labels, SvmParams::new(c, tol))?;
                svm_predict(&model, &g_test)
            }
            (Hyper::Qsvc { bandwidth, c, tol }, Method::Qsvc { .. }) => {
                let full = &self
                    .grams
                    .iter()
                    .find(|(b, _)| *b == bandwidth)
                    .ok_or_else(|| invalid(format!("no cached Gram for bandwidth {bandwidth}")))?
                    .1;
                let model = self.checked_svm(&full.select(train, train), &labels, SvmParams::new(c, tol))?;
                svm_predict(&model, &full.select(test, train))
            }
            (Hyper::Knn { k, metric, weights }, Method::Knn) => {
                let model = KnnModel::new(self.data.select_rows(train), k, metric, weights)?;
                knn_predict(&model, &self.data.select_rows(test))
            }
            (
                Hyper::Dt {
                    criterion,
                    splitter,
                    max_depth,
                    min_samples_split,
                    min_samples_leaf,
                },
                Method::Dt,
            ) => {
                let splitter = match splitter {
                    SplitterKind::Best => Splitter::Best,
                    SplitterKind::Random => Splitter::Random { seed },
                };
                let limits = TreeLimits {
                    max_depth,
                    min_samples_split,
                    min_samples_leaf,
                };
                let model = tree_fit(&self.data.select_rows(train), criterion, splitter, limits)?;
                tree_predict(&model, &self.data.select_rows(test))
            }
            _ => Err(invalid(format!(
                "hyperparameters {} do not fit method {}",
                hyper.key(),
                self.method.name()
            ))),
        }
    }

    /// Accuracy in percent of a fit on `train` evaluated on `test`.
    pub fn score(&self, hyper: &Hyper, train: &[usize], test: &[usize], seed: u64) -> Result<(f64, Vec<Label>)> {
        let pred = self.fit_predict(hyper, train, test, seed)?;
        let truth: Vec<Label> = test.iter().map(|&i| self.data.labels()[i]).collect();
        Ok((100.0 * accuracy(&pred, &truth), pred))
    }
}

/// Seed of the random parts of model fitting in split `s`.
pub fn split_seed(base: u64, s: usize) -> u64 {
    pair_seed(base ^ 0x5EED_5EED_5EED_5EED, s, s)
}

/// Where preprocessing is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "preprocessing", rename_all = "snake_case")]
pub enum Preprocessing {
    /// Data is used as given (already preprocessed on all samples).
    Global,
    /// Standardize/PCA(k)/standardize is fitted on each split's train∪val rows.
    PerSplit { k: usize },
}

/// Validation search on one split; returns the winning point and its accuracy.
pub(crate) fn select_on_validation(
    learner: &Learner,
    points: &[Hyper],
    split: &Split,
    seed: u64,
) -> Result<(Hyper, f64)> {
    let scores: Vec<f64> = points
        .par_iter()
        .map(|h| learner.score(h, &split.train, &split.val, seed).map(|r| r.0))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok((points[best], scores[best]))
}

fn split_learner(
    data: &FeatureMatrix,
    method: Method,
    points: &[Hyper],
    split: &Split,
    pre: Preprocessing,
) -> Result<Learner> {
    match pre {
        Preprocessing::Global => Learner::new(data.clone(), method, points),
        Preprocessing::PerSplit { k } => {
            let (prep, _) = Preprocessor::fit(&data.select_rows(&split.train_val()), k)?;
            Learner::new(prep.transform(data)?, method, points)
        }
    }
}

/// Grid search on train, selection on validation, refit on train∪val and
/// scoring on test, for every split of the plan.
pub fn run_grid_cv(data: &FeatureMatrix, grid: &GridSpec, plan: &SplitPlan) -> Result<ExperimentReport> {
    run_grid_cv_with(data, grid, plan, Preprocessing::Global)
}

pub fn run_grid_cv_with(
    data: &FeatureMatrix,
    grid: &GridSpec,
    plan: &SplitPlan,
    pre: Preprocessing,
) -> Result<ExperimentReport> {
    grid.validate()?;
    if !plan.has_validation() {
        return Err(invalid("grid search needs a plan with a validation set"));
    }
    run_protocol(data, grid, plan, pre, "grid_cv")
}

/// Fits one fixed hyperparameter point on train∪val of every split and
/// scores it on test.
pub fn run_fixed(data: &FeatureMatrix, method: Method, hyper: Hyper, plan: &SplitPlan) -> Result<ExperimentReport> {
    run_fixed_with(data, method, hyper, plan, Preprocessing::Global)
}

pub fn run_fixed_with(
    data: &FeatureMatrix,
    method: Method,
    hyper: Hyper,
    plan: &SplitPlan,
    pre: Preprocessing,
) -> Result<ExperimentReport> {
    let grid = GridSpec::single(method, hyper)?;
    run_protocol(data, &grid, plan, pre, "fixed")
}

fn run_protocol(
    data: &FeatureMatrix,
    grid: &GridSpec,
    plan: &SplitPlan,
    pre: Preprocessing,
    kind: &str,
) -> Result<ExperimentReport> {
    if plan.n != data.n_rows() {
        return Err(dim(format!("split plan covers {} samples, data has {}", plan.n, data.n_rows())));
    }
    let points = grid.points();
    let search = kind == "grid_cv";
    let digest = config_digest(&serde_json::json!({
        "kind": kind,
        "grid": grid,
        "split": plan.config,
        "n": plan.n,
        "preprocessing": pre,
        "data": data_digest(data),
    }))?;

    let shared = match pre {
        Preprocessing::Global => Some(Learner::new(data.clone(), grid.method, &points)?),
        Preprocessing::PerSplit { .. } => None,
    };
    let fits = AtomicUsize::new(0);
    let per_split: Vec<SplitResult> = plan
        .splits
        .par_iter()
        .enumerate()
        .map(|(s, split)| {
            let local;
            let learner = match &shared {
                Some(l) => l,
                None => {
                    local = split_learner(data, grid.method, &points, split, pre)?;
                    &local
                }
            };
            let before = learner.svm_fits_checked();
            let seed = split_seed(plan.config.seed, s);
            let (chosen, val_acc) = if search {
                let (h, v) = select_on_validation(learner, &points, split, seed)?;
                (h, Some(v))
            } else {
                (points[0], None)
            };
            let train_val = split.train_val();
            let (test_acc, predictions) = learner.score(&chosen, &train_val, &split.test, seed)?;
            if shared.is_none() {
                fits.fetch_add(learner.svm_fits_checked() - before, Ordering::Relaxed);
            }
            Ok(SplitResult {
                split: s,
                chosen: vec![chosen],
                val_acc,
                test_acc,
                test_idx: split.test.clone(),
                predictions,
            })
        })
        .collect::<Result<_>>()?;
    let checked = match &shared {
        Some(l) => l.svm_fits_checked(),
        None => fits.load(Ordering::Relaxed),
    };
    let name = format!("{}-{kind}", grid.method.name());
    Ok(ExperimentReport::assemble(name, grid.method, digest, per_split, vec![], checked))
}
