use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, Label};
use crate::error::{dim, invalid, Result};

const DISTANCE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Manhattan,
    Minkowski(f64),
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Metric::Euclidean => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Metric::Manhattan => diffs.sum(),
            Metric::Minkowski(p) => diffs.map(|d| d.powf(p)).sum::<f64>().powf(1.0 / p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weights {
    Uniform,
    Distance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    pub train: FeatureMatrix,
    pub k: usize,
    pub metric: Metric,
    pub weights: Weights,
}

impl KnnModel {
    pub fn new(train: FeatureMatrix, k: usize, metric: Metric, weights: Weights) -> Result<Self> {
        if k == 0 || k > train.n_rows() {
            return Err(invalid(format!(
                "k={k} must lie in 1..={} (training size)",
                train.n_rows()
            )));
        }
        if let Metric::Minkowski(p) = metric {
            if !(p.is_finite() && p >= 1.0) {
                return Err(invalid(format!("Minkowski p must be >= 1, got {p}")));
            }
        }
        Ok(Self {
            train,
            k,
            metric,
            weights,
        })
    }

    /// Vote of the k nearest training rows. Distance ties go to the lower
    /// training index; a tied vote goes to `Patient`.
    pub fn predict_one(&self, query: &[f64]) -> Label {
        let mut dists: Vec<(f64, usize)> = self
            .train
            .rows()
            .enumerate()
            .map(|(i, r)| (self.metric.distance(query, r), i))
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (mut healthy, mut patient) = (0.0, 0.0);
        for &(d, i) in &dists[..self.k] {
            let w = match self.weights {
                Weights::Uniform => 1.0,
                Weights::Distance => 1.0 / (d + DISTANCE_EPS),
            };
            match self.train.labels()[i] {
                Label::Healthy => healthy += w,
                Label::Patient => patient += w,
            }
        }
        if healthy > patient {
            Label::Healthy
        } else {
            Label::Patient
        }
    }
}

pub fn knn_predict(model: &KnnModel, queries: &FeatureMatrix) -> Result<Vec<Label>> {
    if queries.n_cols() != model.train.n_cols() {
        return Err(dim(format!(
            "queries have {} features, training data {}",
            queries.n_cols(),
            model.train.n_cols()
        )));
    }
    Ok(queries.rows().map(|q| model.predict_one(q)).collect())
}
