//! Supervised learners: SVM on precomputed kernels, k-nearest neighbours
//! and a decision tree.

pub mod knn;
pub mod svm;
pub mod tree;

pub use knn::{knn_predict, KnnModel, Metric, Weights};
pub use svm::{svm_fit, svm_predict, SvmModel, SvmParams};
pub use tree::{tree_fit, tree_predict, Criterion, Node, Splitter, TreeLimits, TreeModel};

use crate::data::Label;

/// Fraction of matching labels.
pub fn accuracy(predicted: &[Label], truth: &[Label]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}
