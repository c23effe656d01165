#![allow(dead_code)]

pub mod quantum;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qks_core::data::{FeatureMatrix, Label};
use qks_core::kernels::GramMatrix;

/// Exact dual optimum of a small SVM by enumerating which alphas sit at 0,
/// at C, or strictly inside. Returns (alphas, bias, dual objective).
pub fn svm_bruteforce(gram: &GramMatrix, labels: &[Label], c: f64) -> (Vec<f64>, f64, f64) {
    let n = labels.len();
    let y: Vec<f64> = labels.iter().map(|l| l.sign()).collect();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * gram.get(i, j));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for code in 0..3usize.pow(n as u32) {
        // 0 = lower bound, 1 = upper bound, 2 = free
        let state: Vec<usize> = (0..n).map(|i| (code / 3usize.pow(i as u32)) % 3).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, m)] = y[i];
                a[(m, r)] = y[i];
                let fixed: f64 = (0..n).filter(|j| state[*j] != 2).map(|j| q[(i, j)] * alpha[j]).sum();
                rhs[r] = 1.0 - fixed;
            }
            rhs[m] = -(0..n).filter(|j| state[*j] != 2).map(|j| y[j] * alpha[j]).sum::<f64>();
            let Some(sol) = a.lu().solve(&rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let eq: f64 = (0..n).map(|i| y[i] * alpha[i]).sum();
        if eq.abs() > 1e-9 || alpha.iter().any(|&a| a < -1e-12 || a > c + 1e-12) {
            continue;
        }
        let av = DVector::from_vec(alpha.clone());
        let obj = av.sum() - 0.5 * (av.transpose() * &q * &av)[(0, 0)];
        if best.as_ref().is_none_or(|(_, o)| obj > *o + 1e-12) {
            best = Some((alpha, obj));
        }
    }
    let (alpha, obj) = best.expect("the zero vector is always feasible");
    // bias from free alphas, else the midpoint of the feasible interval
    let f = |i: usize| (0..n).map(|j| alpha[j] * y[j] * gram.get(j, i)).sum::<f64>();
    let tol = 1e-9;
    let free: Vec<usize> = (0..n).filter(|&i| alpha[i] > tol && alpha[i] < c - tol).collect();
    let bias = if !free.is_empty() {
        free.iter().map(|&i| y[i] - f(i)).sum::<f64>() / free.len() as f64
    } else {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..n {
            let g = y[i] - f(i);
            let at_upper = alpha[i] >= c - tol;
            // y_i f(x_i) >= 1 at the lower bound, <= 1 at the upper bound
            if (y[i] > 0.0) != at_upper {
                lo = lo.max(g);
            } else {
                hi = hi.min(g);
            }
        }
        0.5 * (lo + hi)
    };
    (alpha, bias, obj)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let mut labels: Vec<Label> = (0..n)
        .map(|_| if rng.random_bool(0.5) { Label::Patient } else { Label::Healthy })
        .collect();
    labels[0] = Label::Patient;
    labels[n - 1] = Label::Healthy;
    FeatureMatrix::from_rows(&rows, labels).unwrap()
}

/// Two Gaussian blobs whose centres differ by `gap` along every axis.
pub fn blobs(seed: u64, n: usize, d: usize, gap: f64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<Label> = (0..n)
        .map(|i| if i % 2 == 0 { Label::Patient } else { Label::Healthy })
        .collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|l| {
            (0..d)
                .map(|_| 0.5 * gap * l.sign() + rng.random_range(-1.0..1.0) + rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    FeatureMatrix::from_rows(&rows, labels).unwrap()
}
