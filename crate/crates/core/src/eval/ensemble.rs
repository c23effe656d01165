use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::accuracy;
use crate::data::{preprocess, select_task_features, FeatureMatrix, Label, SplitPlan, FEATURES_PER_TASK};
use crate::error::{dim, invalid, Result};
use crate::eval::grid::{GridSpec, Hyper, Method};
use crate::eval::protocol::{select_on_validation, split_seed, Learner};
use crate::eval::report::{config_digest, data_digest, mean_std, ExperimentReport, MemberSummary, SplitResult};

/// Best five single tasks for the classical SVC ensemble.
pub const BEST5_CLASSICAL: [usize; 5] = [21, 17, 16, 7, 23];
/// Best five single tasks for the 9-qubit quantum ensemble.
pub const BEST5_QUANTUM: [usize; 5] = [21, 17, 24, 14, 23];

/// Per-sample majority; a tied vote (even voter count) goes to `Patient`.
pub fn majority_vote(predictions: &[Vec<Label>]) -> Result<Vec<Label>> {
    let first = predictions.first().ok_or_else(|| invalid("majority vote needs at least one voter"))?;
    if let Some(bad) = predictions.iter().find(|p| p.len() != first.len()) {
        return Err(dim(format!(
            "voters disagree on length: {} vs {}",
            first.len(),
            bad.len()
        )));
    }
    Ok((0..first.len())
        .map(|i| {
            let sum: f64 = predictions.iter().map(|p| p[i].sign()).sum();
            Label::from_decision(sum)
        })
        .collect())
}

/// How each ensemble member gets its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "selection", rename_all = "lowercase")]
pub enum MemberSelection {
    /// Same point for every member and split; fitted on train∪val.
    Fixed { hyper: Hyper },
    /// Validation search per member and split; needs a validation set.
    Grid { grid: GridSpec },
}

/// Majority vote over one model per task, each trained on that task's 18
/// features after standardize/PCA(18)/standardize on all samples.
pub fn per_task_ensemble(
    data: &FeatureMatrix,
    method: Method,
    selection: &MemberSelection,
    plan: &SplitPlan,
    tasks: &[usize],
) -> Result<ExperimentReport> {
    if tasks.is_empty() {
        return Err(invalid("per-task ensemble needs at least one task"));
    }
    if plan.n != data.n_rows() {
        return Err(dim(format!("split plan covers {} samples, data has {}", plan.n, data.n_rows())));
    }
    let points = match selection {
        MemberSelection::Fixed { hyper } => GridSpec::single(method, *hyper)?.points(),
        MemberSelection::Grid { grid } => {
            grid.validate()?;
            if grid.method != method {
                return Err(invalid("member grid belongs to a different method"));
            }
            if !plan.has_validation() {
                return Err(invalid("member grid search needs a plan with a validation set"));
            }
            grid.points()
        }
    };
    let digest = config_digest(&serde_json::json!({
        "kind": "per_task_ensemble",
        "method": method,
        "selection": selection,
        "tasks": tasks,
        "split": plan.config,
        "n": plan.n,
        "data": data_digest(data),
    }))?;

    let learners: Vec<Learner> = tasks
        .iter()
        .map(|&t| {
            let task_data = preprocess(&select_task_features(data, &[t])?, FEATURES_PER_TASK)?;
            Learner::new(task_data, method, &points)
        })
        .collect::<Result<_>>()?;

    struct Member {
        hyper: Hyper,
        acc: f64,
        pred: Vec<Label>,
    }
    let search = matches!(selection, MemberSelection::Grid { .. });
    let per_split_members: Vec<Vec<Member>> = plan
        .splits
        .par_iter()
        .enumerate()
        .map(|(s, split)| {
            let seed = split_seed(plan.config.seed, s);
            learners
                .iter()
                .map(|learner| {
                    let hyper = if search {
                        select_on_validation(learner, &points, split, seed)?.0
                    } else {
                        points[0]
                    };
                    let (acc, pred) = learner.score(&hyper, &split.train_val(), &split.test, seed)?;
                    Ok(Member { hyper, acc, pred })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut per_split = Vec::with_capacity(plan.splits.len());
    for (s, (split, members)) in plan.splits.iter().zip(&per_split_members).enumerate() {
        let votes: Vec<Vec<Label>> = members.iter().map(|m| m.pred.clone()).collect();
        let predictions = majority_vote(&votes)?;
        let truth: Vec<Label> = split.test.iter().map(|&i| data.labels()[i]).collect();
        per_split.push(SplitResult {
            split: s,
            chosen: members.iter().map(|m| m.hyper).collect(),
            val_acc: None,
            test_acc: 100.0 * accuracy(&predictions, &truth),
            test_idx: split.test.clone(),
            predictions,
        });
    }
    let members = tasks
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let accs: Vec<f64> = per_split_members.iter().map(|m| m[k].acc).collect();
            let (mean_acc, std_acc) = mean_std(&accs);
            MemberSummary {
                name: format!("task{t}"),
                mean_acc,
                std_acc,
            }
        })
        .collect();
    let checked = learners.iter().map(Learner::svm_fits_checked).sum();
    let name = format!("{}-per-task-{}", method.name(), tasks.len());
    Ok(ExperimentReport::assemble(name, method, digest, per_split, members, checked))
}
