//! Soft-margin SVM on a precomputed Gram matrix, solved in the dual by SMO.
//!
//! Dual problem: minimize `1/2 a'Qa - e'a` subject to `y'a = 0` and
//! `0 <= a_i <= C`, with `Q_ij = y_i y_j K_ij`. Each iteration picks the
//! maximal violating pair and solves the two-variable subproblem exactly;
//! iteration stops once the violation `m(a) - M(a)` is at most `tol`.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{dim, invalid, Error, Result};
use crate::kernels::{GramMatrix, Kernel};

/// Alphas above this count as support vectors.
pub const SUPPORT_EPS: f64 = 1e-8;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_iter: 200_000_000,
        }
    }
}

impl SvmParams {
    pub fn new(c: f64, tol: f64) -> Self {
        Self {
            c,
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub support_idx: Vec<usize>,
    pub train_labels: Vec<Label>,
    /// Sample ids of the training rows, as in the fitting Gram.
    pub train_ids: Vec<usize>,
    pub params: SvmParams,
    pub kernel: Kernel,
    pub iterations: usize,
    /// Final maximal KKT violation.
    pub violation: f64,
}

/// Fits the dual on a square training Gram.
pub fn svm_fit(gram: &GramMatrix, labels: &[Label], params: SvmParams) -> Result<SvmModel> {
    let n = gram.n_rows;
    if !gram.is_square() {
        return Err(dim(format!("training Gram is {}x{}", gram.n_rows, gram.n_cols)));
    }
    if labels.len() != n {
        return Err(dim(format!("{} labels for a {n}x{n} Gram", labels.len())));
    }
    if !(params.c.is_finite() && params.c > 0.0) || !(params.tol.is_finite() && params.tol > 0.0) {
        return Err(invalid(format!(
            "C and tol must be positive (C={}, tol={})",
            params.c, params.tol
        )));
    }
    if !labels.contains(&Label::Patient) || !labels.contains(&Label::Healthy) {
        return Err(invalid("SVM training needs both classes"));
    }
    let scale = gram.values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let asym = gram.asymmetry().unwrap_or(0.0);
    if asym > 1e-9 * scale {
        return Err(Error::Numerical(format!("training Gram is not symmetric (defect {asym:e})")));
    }

    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let c = params.c;
    let k = |i: usize, j: usize| gram.get(i, j);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];

    let mut iterations = 0;
    let mut violation;
    loop {
        let (sel, gap) = select_pair(&alpha, &grad, &y, c);
        violation = gap;
        let Some((i, j)) = sel else { break };
        if gap <= params.tol || iterations >= params.max_iter {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = y[i] * y[j] * k(i, j);
        if y[i] != y[j] {
            let quad = positive(k(i, i) + k(j, j) + 2.0 * qij);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = positive(k(i, i) + k(j, j) - 2.0 * qij);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(i, t) * di + y[j] * k(j, t) * dj);
        }
    }

    let bias = -rho(&alpha, &grad, &y, c);
    let support_idx = (0..n).filter(|&i| alpha[i] > SUPPORT_EPS).collect();
    Ok(SvmModel {
        alphas: alpha,
        bias,
        support_idx,
        train_labels: labels.to_vec(),
        train_ids: gram.row_ids.clone(),
        params,
        kernel: gram.kernel.clone(),
        iterations,
        violation,
    })
}

fn positive(quad: f64) -> f64 {
    if quad > 0.0 {
        quad
    } else {
        TAU
    }
}

fn in_up(a: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(a: f64, y: f64, c: f64) -> bool {
    (y < 0.0 && a < c) || (y > 0.0 && a > 0.0)
}

/// Maximal violating pair and its gap `m - M`.
fn select_pair(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> (Option<(usize, usize)>, f64) {
    let mut best_up = (f64::NEG_INFINITY, None);
    let mut best_low = (f64::INFINITY, None);
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(alpha[t], y[t], c) && v > best_up.0 {
            best_up = (v, Some(t));
        }
        if in_low(alpha[t], y[t], c) && v < best_low.0 {
            best_low = (v, Some(t));
        }
    }
    match (best_up.1, best_low.1) {
        (Some(i), Some(j)) => (Some((i, j)), best_up.0 - best_low.0),
        _ => (None, 0.0),
    }
}

/// Offset rho (decision = sum - rho): mean of free gradients, or the
/// midpoint of the feasible interval when no alpha is free.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

impl SvmModel {
    /// Dual objective `sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij` (to be maximized).
    pub fn dual_objective(&self, gram: &GramMatrix) -> f64 {
        dual_objective(&self.alphas, &self.train_labels, gram)
    }

    /// Checks box and equality constraints, the support set and the KKT gap.
    pub fn check_invariants(&self) -> Result<()> {
        let c = self.params.c;
        if let Some((i, a)) = self
            .alphas
            .iter()
            .enumerate()
            .find(|(_, &a)| !(0.0..=c).contains(&a))
        {
            return Err(Error::Numerical(format!("alpha[{i}] = {a} outside [0, {c}]")));
        }
        let eq: f64 = self
            .alphas
            .iter()
            .zip(&self.train_labels)
            .map(|(a, l)| a * l.sign())
            .sum();
        if eq.abs() > 1e-6 {
            return Err(Error::Numerical(format!("sum alpha_i y_i = {eq:e}")));
        }
        let expected: Vec<usize> = (0..self.alphas.len())
            .filter(|&i| self.alphas[i] > SUPPORT_EPS)
            .collect();
        if expected != self.support_idx {
            return Err(Error::Numerical("support set out of sync with alphas".into()));
        }
        if self.violation > self.params.tol {
            return Err(Error::Numerical(format!(
                "KKT violation {:e} above tol {:e} after {} iterations",
                self.violation, self.params.tol, self.iterations
            )));
        }
        Ok(())
    }

    /// Decision values `sum_i a_i y_i K(test, i) + b` for a test x train Gram.
    pub fn decision_function(&self, gram_test: &GramMatrix) -> Result<Vec<f64>> {
        if gram_test.n_cols != self.alphas.len() {
            return Err(dim(format!(
                "test Gram has {} columns, model has {} training rows",
                gram_test.n_cols,
                self.alphas.len()
            )));
        }
        if gram_test.col_ids != self.train_ids {
            return Err(dim("test Gram columns do not match the training samples"));
        }
        Ok((0..gram_test.n_rows)
            .map(|r| {
                let row = gram_test.row(r);
                self.support_idx
                    .iter()
                    .map(|&i| self.alphas[i] * self.train_labels[i].sign() * row[i])
                    .sum::<f64>()
                    + self.bias
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn dual_objective(alphas: &[f64], labels: &[Label], gram: &GramMatrix) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * labels[i].sign() * labels[j].sign() * gram.get(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Predicted labels; a zero decision value maps to `Patient`.
pub fn svm_predict(model: &SvmModel, gram_test: &GramMatrix) -> Result<Vec<Label>> {
    Ok(model
        .decision_function(gram_test)?
        .into_iter()
        .map(Label::from_decision)
        .collect())
}
