//! Experiment protocols: validation grid search over split plans, per-task
//! majority-vote ensembles and the noisy-kernel study.

pub mod ensemble;
pub mod grid;
pub mod noise_study;
pub mod protocol;
pub mod report;

pub use ensemble::{majority_vote, per_task_ensemble, MemberSelection, BEST5_CLASSICAL, BEST5_QUANTUM};
pub use grid::{Axes, DtAxes, GridSpec, Hyper, KnnAxes, Method, QsvcAxes, SplitterKind, SvcAxes};
pub use noise_study::{median, noise_study, NoiseEntry, NoiseStudyReport};
pub use protocol::{run_fixed, run_fixed_with, run_grid_cv, run_grid_cv_with, split_seed, Learner, Preprocessing};
pub use report::{config_digest, data_digest, mean_std, ExperimentReport, MemberSummary, SplitResult};
