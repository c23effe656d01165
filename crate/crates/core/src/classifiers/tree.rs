//! Binary CART classifier.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, Label};
use crate::error::{dim, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Gini,
    Entropy,
}

impl Criterion {
    /// Impurity of a node holding `h` healthy and `p` patient samples.
    pub fn impurity(self, h: usize, p: usize) -> f64 {
        let n = (h + p) as f64;
        if n == 0.0 {
            return 0.0;
        }
        let (fh, fp) = (h as f64 / n, p as f64 / n);
        match self {
            Criterion::Gini => 1.0 - fh * fh - fp * fp,
            Criterion::Entropy => [fh, fp]
                .iter()
                .filter(|&&f| f > 0.0)
                .map(|f| -f * f.log2())
                .sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitter {
    Best,
    /// One uniformly drawn threshold per feature; the best of those wins.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeLimits {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeLimits {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        label: Label,
        /// [healthy, patient]
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Samples routed through this node.
    pub fn n_samples(&self) -> usize {
        match self {
            Node::Leaf { counts, .. } => counts[0] + counts[1],
            Node::Split { left, right, .. } => left.n_samples() + right.n_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub root: Node,
    pub criterion: Criterion,
    pub splitter: Splitter,
    pub limits: TreeLimits,
    pub n_features: usize,
}

struct Builder<'a> {
    data: &'a FeatureMatrix,
    criterion: Criterion,
    limits: TreeLimits,
    rng: Option<ChaCha8Rng>,
}

fn counts(data: &FeatureMatrix, idx: &[usize]) -> [usize; 2] {
    let p = idx
        .iter()
        .filter(|&&i| data.labels()[i] == Label::Patient)
        .count();
    [idx.len() - p, p]
}

fn majority(c: [usize; 2]) -> Label {
    if c[0] > c[1] {
        Label::Healthy
    } else {
        Label::Patient
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Builder<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> Node {
        let c = counts(self.data, &idx);
        let leaf = Node::Leaf {
            label: majority(c),
            counts: c,
        };
        let n = idx.len();
        if c[0] == 0
            || c[1] == 0
            || n < self.limits.min_samples_split
            || n < 2 * self.limits.min_samples_leaf
            || self.limits.max_depth.is_some_and(|d| depth >= d)
        {
            return leaf;
        }
        let Some(best) = self.best_split(&idx) else {
            return leaf;
        };
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.data.get(i, best.feature) <= best.threshold);
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Candidate> {
        let mut features: Vec<usize> = (0..self.data.n_cols()).collect();
        if let Some(rng) = self.rng.as_mut() {
            features.shuffle(rng);
        }
        let mut best: Option<Candidate> = None;
        for f in features {
            let cand = if self.rng.is_some() {
                self.random_threshold(idx, f)
            } else {
                self.best_threshold(idx, f)
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.score < b.score) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn weighted(&self, left: [usize; 2], right: [usize; 2]) -> f64 {
        let nl = (left[0] + left[1]) as f64;
        let nr = (right[0] + right[1]) as f64;
        (nl * self.criterion.impurity(left[0], left[1]) + nr * self.criterion.impurity(right[0], right[1]))
            / (nl + nr)
    }

    fn best_threshold(&self, idx: &[usize], f: usize) -> Option<Candidate> {
        let mut sorted: Vec<(f64, Label)> = idx
            .iter()
            .map(|&i| (self.data.get(i, f), self.data.labels()[i]))
            .collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = counts(self.data, idx);
        let mut left = [0usize; 2];
        let mut best: Option<Candidate> = None;
        let min_leaf = self.limits.min_samples_leaf;
        for k in 0..sorted.len() - 1 {
            match sorted[k].1 {
                Label::Healthy => left[0] += 1,
                Label::Patient => left[1] += 1,
            }
            let (a, b) = (sorted[k].0, sorted[k + 1].0);
            if a == b || k + 1 < min_leaf || sorted.len() - k - 1 < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let score = self.weighted(left, right);
            if best.as_ref().is_none_or(|c| score < c.score) {
                let mut threshold = a / 2.0 + b / 2.0;
                if threshold >= b || threshold < a {
                    threshold = a;
                }
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
        best
    }

    fn random_threshold(&mut self, idx: &[usize], f: usize) -> Option<Candidate> {
        let (lo, hi) = idx
            .iter()
            .map(|&i| self.data.get(i, f))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if hi <= lo {
            return None;
        }
        let rng = self.rng.as_mut().expect("random splitter");
        let mut threshold = rng.random_range(lo..hi);
        if threshold >= hi {
            threshold = lo;
        }
        let mut left = [0usize; 2];
        let mut right = [0usize; 2];
        for &i in idx {
            let side = if self.data.get(i, f) <= threshold {
                &mut left
            } else {
                &mut right
            };
            match self.data.labels()[i] {
                Label::Healthy => side[0] += 1,
                Label::Patient => side[1] += 1,
            }
        }
        let min_leaf = self.limits.min_samples_leaf;
        if left[0] + left[1] < min_leaf || right[0] + right[1] < min_leaf {
            return None;
        }
        Some(Candidate {
            feature: f,
            threshold,
            score: self.weighted(left, right),
        })
    }
}

/// Grows a tree greedily until nodes are pure or a limit is hit. Leaves
/// predict the majority label, `Patient` on ties.
pub fn tree_fit(data: &FeatureMatrix, criterion: Criterion, splitter: Splitter, limits: TreeLimits) -> Result<TreeModel> {
    if limits.min_samples_split < 2 || limits.min_samples_leaf < 1 {
        return Err(invalid(format!(
            "min_samples_split must be >= 2 and min_samples_leaf >= 1, got {} / {}",
            limits.min_samples_split, limits.min_samples_leaf
        )));
    }
    if limits.max_depth == Some(0) {
        return Err(invalid("max_depth must be at least 1"));
    }
    let rng = match splitter {
        Splitter::Best => None,
        Splitter::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut builder = Builder {
        data,
        criterion,
        limits,
        rng,
    };
    let root = builder.grow((0..data.n_rows()).collect(), 0);
    Ok(TreeModel {
        root,
        criterion,
        splitter,
        limits,
        n_features: data.n_cols(),
    })
}

impl TreeModel {
    pub fn predict_one(&self, x: &[f64]) -> Label {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn tree_predict(model: &TreeModel, queries: &FeatureMatrix) -> Result<Vec<Label>> {
    if queries.n_cols() != model.n_features {
        return Err(dim(format!(
            "tree expects {} features, queries have {}",
            model.n_features,
            queries.n_cols()
        )));
    }
    Ok(queries.rows().map(|q| model.predict_one(q)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    fn fm(rows: &[Vec<f64>], labels: &[Label]) -> FeatureMatrix {
        FeatureMatrix::from_rows(rows, labels.to_vec()).unwrap()
    }

    #[test]
    fn pure_data_is_one_leaf() {
        let d = fm(&[vec![0.0], vec![1.0]], &[Healthy, Healthy]);
        let t = tree_fit(&d, Criterion::Gini, Splitter::Best, TreeLimits::default()).unwrap();
        assert_eq!(t.root, Node::Leaf { label: Healthy, counts: [2, 0] });
    }

    #[test]
    fn one_dimensional_threshold() {
        let d = fm(
            &[vec![0.0], vec![1.0], vec![2.0], vec![3.0]],
            &[Healthy, Healthy, Patient, Patient],
        );
        let limits = TreeLimits {
            max_depth: Some(1),
            ..TreeLimits::default()
        };
        let t = tree_fit(&d, Criterion::Gini, Splitter::Best, limits).unwrap();
        match &t.root {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            n => panic!("expected split, got {n:?}"),
        }
        assert_eq!(tree_predict(&t, &d).unwrap(), d.labels());
        assert_eq!(t.predict_one(&[0.7]), Healthy);
    }

    #[test]
    fn entropy_values() {
        assert_eq!(Criterion::Entropy.impurity(2, 2), 1.0);
        assert_eq!(Criterion::Entropy.impurity(3, 0), 0.0);
        assert_eq!(Criterion::Gini.impurity(2, 2), 0.5);
    }

    #[test]
    fn limits_validation() {
        let d = fm(&[vec![0.0], vec![1.0]], &[Healthy, Patient]);
        let bad = TreeLimits {
            min_samples_split: 1,
            ..TreeLimits::default()
        };
        assert!(tree_fit(&d, Criterion::Gini, Splitter::Best, bad).is_err());
        let t = tree_fit(&d, Criterion::Gini, Splitter::Best, TreeLimits::default()).unwrap();
        assert!(tree_predict(&t, &fm(&[vec![0.0, 0.0]], &[Healthy])).is_err());
    }

    #[test]
    fn min_leaf_blocks_split() {
        let d = fm(&[vec![0.0], vec![1.0], vec![2.0]], &[Healthy, Patient, Patient]);
        let limits = TreeLimits {
            min_samples_leaf: 2,
            ..TreeLimits::default()
        };
        let t = tree_fit(&d, Criterion::Gini, Splitter::Best, limits).unwrap();
        assert_eq!(t.root.n_leaves(), 1);
        assert_eq!(t.root.n_samples(), 3);
    }

    #[test]
    fn random_splitter_is_seeded() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let labels: Vec<Label> = (0..20).map(|i| if i % 3 == 0 { Patient } else { Healthy }).collect();
        let d = fm(&rows, &labels);
        let a = tree_fit(&d, Criterion::Entropy, Splitter::Random { seed: 5 }, TreeLimits::default()).unwrap();
        let b = tree_fit(&d, Criterion::Entropy, Splitter::Random { seed: 5 }, TreeLimits::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(tree_predict(&a, &d).unwrap(), labels);
    }
}
