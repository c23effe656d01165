//! Synthetic data with the DARWIN layout, for exercising the pipeline
//! without the real dataset.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{FeatureMatrix, Label, N_TASKS};
use crate::error::Result;

/// The 18 per-task feature names, in file order.
pub const FEATURE_STEMS: [&str; 18] = [
    "air_time",
    "disp_index",
    "gmrt_in_air",
    "gmrt_on_paper",
    "max_x_extension",
    "max_y_extension",
    "mean_acc_in_air",
    "mean_acc_on_paper",
    "mean_gmrt",
    "mean_jerk_in_air",
    "mean_jerk_on_paper",
    "mean_speed_in_air",
    "mean_speed_on_paper",
    "num_of_pendown",
    "paper_time",
    "pressure_mean",
    "pressure_var",
    "total_time",
];

/// Column names `air_time1, ..., total_time25` in task-major order.
pub fn darwin_column_names() -> Vec<String> {
    (1..=N_TASKS)
        .flat_map(|t| FEATURE_STEMS.iter().map(move |s| format!("{s}{t}")))
        .collect()
}

/// Positive, skewed features driven by a class-dependent latent score.
/// `separation` scales the class gap of the latent score; tasks differ in
/// how strongly their features load on it.
pub fn synthetic_darwin(n_patients: usize, n_healthy: usize, separation: f64, seed: u64) -> Result<FeatureMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = darwin_column_names();
    let d = names.len();
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let task_weight: Vec<f64> = (0..N_TASKS).map(|_| rng.random_range(0.2..1.0)).collect();
    let loading: Vec<f64> = (0..d)
        .map(|j| rng.random_range(-1.0..1.0) * task_weight[j / FEATURE_STEMS.len()])
        .collect();
    let base: Vec<f64> = (0..d).map(|_| 10f64.powf(rng.random_range(0.0..4.0))).collect();

    let n = n_patients + n_healthy;
    let mut labels: Vec<Label> = (0..n)
        .map(|i| if i < n_patients { Label::Patient } else { Label::Healthy })
        .collect();
    // interleave classes so row order carries no information
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    let mut data = Vec::with_capacity(n * d);
    for label in &labels {
        let z = 0.5 * separation * label.sign() + std.sample(&mut rng);
        for j in 0..d {
            let e: f64 = std.sample(&mut rng);
            data.push(base[j] * (0.3 * (loading[j] * z + e)).exp());
        }
    }
    let ids = (1..=n).map(|i| format!("id_{i}")).collect();
    FeatureMatrix::with_ids(data, n, d, labels, names, ids)
}
