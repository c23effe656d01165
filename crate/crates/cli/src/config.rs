//! Run configuration: a flat JSON file mirroring the `run` flags, with
//! flags taking precedence, resolved against per-experiment defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use qks_core::data::TaskCategory;
use qks_core::kernels::ExecutionMode;
use qks_core::sim::NoiseModel;

use crate::CliError;

pub const SEED_ENV: &str = "QKS_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Main,
    SubsampleCategory,
    PerTask,
    Noise,
    Spectrum,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Main => "main",
            Kind::SubsampleCategory => "subsample-category",
            Kind::PerTask => "per-task",
            Kind::Noise => "noise",
            Kind::Spectrum => "spectrum",
        }
    }
}

/// Everything `run` accepts. Unset fields fall back to the config file,
/// then to the experiment's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunOptions {
    #[arg(skip)]
    pub kind: Option<Kind>,
    /// DARWIN CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory for reports and plots.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for splits, shots and noise; falls back to QKS_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// svc, knn, dt, qsvc or all.
    #[arg(long)]
    pub method: Option<String>,
    /// Qubit counts for quantum runs, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub qubits: Option<Vec<usize>>,
    /// exact, shots:N or noisy.
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of shuffle splits.
    #[arg(long)]
    pub splits: Option<usize>,
    /// PCA components kept.
    #[arg(long)]
    pub components: Option<usize>,
    /// Fit preprocessing on each split's train and validation rows.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub pca_per_split: Option<bool>,
    /// JSON grid replacing the default grid of a single-method main run.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Task categories for subsampling: copy, graphic, memory.
    #[arg(long, value_delimiter = ',')]
    pub category: Option<Vec<String>>,
    /// Per-task members: all, best5 or a comma separated task list.
    #[arg(long)]
    pub tasks: Option<String>,
    /// Main-run reports to take modal hyperparameters from (repeatable).
    #[arg(long)]
    pub from_report: Option<Vec<PathBuf>>,
    /// Select per-task member hyperparameters on a validation split.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub member_grid: Option<bool>,
    /// Noisy runs in the noise study.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Encoding bandwidth for noise, spectrum and default quantum members.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Shots per kernel entry in noisy mode and the noise study.
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub t1_us: Option<f64>,
    #[arg(long)]
    pub t2_us: Option<f64>,
}

impl RunOptions {
    pub fn from_file(path: &Path) -> Result<RunOptions, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `self` win over `base`.
    pub fn over(self, base: RunOptions) -> RunOptions {
        RunOptions {
            kind: self.kind.or(base.kind),
            data: self.data.or(base.data),
            out: self.out.or(base.out),
            seed: self.seed.or(base.seed),
            method: self.method.or(base.method),
            qubits: self.qubits.or(base.qubits),
            mode: self.mode.or(base.mode),
            splits: self.splits.or(base.splits),
            components: self.components.or(base.components),
            pca_per_split: self.pca_per_split.or(base.pca_per_split),
            grid: self.grid.or(base.grid),
            category: self.category.or(base.category),
            tasks: self.tasks.or(base.tasks),
            from_report: self.from_report.or(base.from_report),
            member_grid: self.member_grid.or(base.member_grid),
            runs: self.runs.or(base.runs),
            bandwidth: self.bandwidth.or(base.bandwidth),
            shots: self.shots.or(base.shots),
            t1_us: self.t1_us.or(base.t1_us),
            t2_us: self.t2_us.or(base.t2_us),
        }
    }

    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let kind = self
            .kind
            .ok_or_else(|| CliError::Usage("no experiment kind given on the command line or in the config".into()))?;
        let seed = match self.seed {
            Some(s) => s,
            None => match std::env::var(SEED_ENV) {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?,
                Err(_) => 0,
            },
        };
        let default_qubits = match kind {
            Kind::SubsampleCategory => vec![12],
            Kind::PerTask => vec![9],
            _ => vec![6, 8, 12],
        };
        let config = RunConfig {
            kind,
            data: self.data.unwrap_or_else(|| PathBuf::from("data/DARWIN.csv")),
            out: self.out.unwrap_or_else(|| Path::new("results").join(kind.name())),
            seed,
            method: self.method.unwrap_or_else(|| "all".into()).to_ascii_lowercase(),
            qubits: self.qubits.unwrap_or(default_qubits),
            mode: self.mode.unwrap_or_else(|| "exact".into()).to_ascii_lowercase(),
            splits: self.splits.unwrap_or(20),
            components: self.components.unwrap_or(24),
            pca_per_split: self.pca_per_split.unwrap_or(false),
            grid: self.grid,
            category: self
                .category
                .unwrap_or_else(|| TaskCategory::ALL.iter().map(|c| c.name().to_string()).collect()),
            tasks: self.tasks.unwrap_or_else(|| "all".into()),
            from_report: self.from_report.unwrap_or_default(),
            member_grid: self.member_grid.unwrap_or(false),
            runs: self.runs.unwrap_or(20),
            bandwidth: self.bandwidth.unwrap_or(0.4),
            shots: self.shots.unwrap_or(256),
            t1_us: self.t1_us.unwrap_or(50.0),
            t2_us: self.t2_us.unwrap_or(70.0),
        };
        config.validate()?;
        Ok(config)
    }
}

/// Fully resolved configuration; written next to every artifact and
/// accepted back through `--config`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunConfig {
    pub kind: Kind,
    pub data: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub method: String,
    pub qubits: Vec<usize>,
    pub mode: String,
    pub splits: usize,
    pub components: usize,
    pub pca_per_split: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    pub category: Vec<String>,
    pub tasks: String,
    pub from_report: Vec<PathBuf>,
    pub member_grid: bool,
    pub runs: usize,
    pub bandwidth: f64,
    pub shots: u64,
    pub t1_us: f64,
    pub t2_us: f64,
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        let allowed: &[&str] = match self.kind {
            Kind::Main => &["all", "svc", "knn", "dt", "qsvc"],
            Kind::SubsampleCategory | Kind::PerTask => &["all", "svc", "qsvc"],
            Kind::Noise | Kind::Spectrum => &["all", "qsvc"],
        };
        if !allowed.contains(&self.method.as_str()) {
            return usage(format!(
                "method {:?} not available for {}; expected one of {allowed:?}",
                self.method,
                self.kind.name()
            ));
        }
        if self.qubits.is_empty() || self.qubits.iter().any(|&q| q == 0) {
            return usage("--qubits needs at least one positive qubit count".into());
        }
        self.execution_mode()?;
        if self.splits == 0 || self.runs == 0 || self.shots == 0 {
            return usage("--splits, --runs and --shots must be positive".into());
        }
        if self.components == 0 {
            return usage("--components must be positive".into());
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return usage(format!("--bandwidth must be positive, got {}", self.bandwidth));
        }
        self.categories()?;
        if self.kind == Kind::PerTask {
            self.task_list("svc")?;
        }
        if self.grid.is_some() && (self.kind != Kind::Main || self.method == "all") {
            return usage("--grid applies to a main run with a single --method".into());
        }
        self.noise_model().validate().map_err(|e| CliError::Usage(e.to_string()))?;
        fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Usage(format!("output directory {} not writable: {e}", self.out.display())))?;
        Ok(())
    }

    pub fn noise_model(&self) -> NoiseModel {
        NoiseModel {
            t1_us: self.t1_us,
            t2_us: self.t2_us,
            shots: self.shots,
            ..NoiseModel::melbourne(self.seed)
        }
    }

    pub fn execution_mode(&self) -> Result<ExecutionMode, CliError> {
        match self.mode.as_str() {
            "exact" => Ok(ExecutionMode::Exact),
            "noisy" => Ok(ExecutionMode::Noisy {
                noise: self.noise_model(),
            }),
            m => match m.strip_prefix("shots:").map(str::parse::<u64>) {
                Some(Ok(shots)) if shots > 0 => Ok(ExecutionMode::Shots { shots, seed: self.seed }),
                _ => Err(CliError::Usage(format!("--mode {m:?}: expected exact, shots:N or noisy"))),
            },
        }
    }

    pub fn categories(&self) -> Result<Vec<TaskCategory>, CliError> {
        self.category
            .iter()
            .map(|c| TaskCategory::parse(c).ok_or_else(|| CliError::Usage(format!("unknown task category {c:?}"))))
            .collect()
    }

    /// Member tasks of a per-task ensemble for `method` ("svc" or "qsvc").
    pub fn task_list(&self, method: &str) -> Result<Vec<usize>, CliError> {
        use qks_core::eval::{BEST5_CLASSICAL, BEST5_QUANTUM};
        match self.tasks.as_str() {
            "all" => Ok((1..=25).collect()),
            "best5" if method == "qsvc" => Ok(BEST5_QUANTUM.to_vec()),
            "best5" => Ok(BEST5_CLASSICAL.to_vec()),
            list => {
                let tasks: Vec<usize> = list
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().ok().filter(|t| (1..=25).contains(t)))
                    .collect::<Option<_>>()
                    .ok_or_else(|| CliError::Usage(format!("--tasks {list:?}: expected all, best5 or task numbers 1-25")))?;
                if tasks.is_empty() {
                    return Err(CliError::Usage("--tasks is empty".into()));
                }
                Ok(tasks)
            }
        }
    }
}
