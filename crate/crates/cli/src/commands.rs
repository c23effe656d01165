use std::fs;
use std::path::Path;

use serde::Serialize;

use qks_core::classifiers::SvmParams;
use qks_core::data::{
    load_darwin, make_splits, preprocess, select_task_features, validate_darwin, FeatureMatrix, Preprocessor,
    SplitConfig,
};
use qks_core::eval::{
    noise_study, per_task_ensemble, run_fixed_with, run_grid_cv_with, ExperimentReport, GridSpec, Hyper,
    MemberSelection, Method, Preprocessing,
};
use qks_core::kernels::{gram_symmetric, spectrum, KernelParams, Spectrum};
use qks_core::sim::build_ansatz;

use crate::config::{Kind, RunConfig};
use crate::svg::{log_plot, Series};
use crate::CliError;

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(qks_core::Error::from)?;
    write(path, &(text + "\n"))
}

pub fn validate(path: &Path) -> Result<(), CliError> {
    let report = validate_darwin(path)?;
    for issue in &report.issues {
        eprintln!("{issue}");
    }
    println!("{}", report.summary());
    if report.is_ok() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{}: {} schema issue(s)", path.display(), report.issues.len())))
    }
}

pub fn preprocess_cmd(data: &Path, components: usize, out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Usage(format!("output directory {} not writable: {e}", out.display())))?;
    let raw = load_darwin(data)?;
    let (prep, x) = Preprocessor::fit(&raw, components)?;
    x.write_csv(&out.join("features.csv"))?;
    write_json(&out.join("preprocessor.json"), &prep)?;
    write_json(
        &out.join("config.json"),
        &serde_json::json!({ "data": data, "components": components }),
    )?;
    println!(
        "{} rows, {} components -> {}",
        x.n_rows(),
        x.n_cols(),
        out.join("features.csv").display()
    );
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    write_json(&cfg.out.join("config.json"), cfg)?;
    let data = load_darwin(&cfg.data)?;
    eprintln!(
        "loaded {}: {} rows, {} features",
        cfg.data.display(),
        data.n_rows(),
        data.n_cols()
    );
    match cfg.kind {
        Kind::Main => main_table(cfg, &data),
        Kind::SubsampleCategory => subsample(cfg, &data),
        Kind::PerTask => per_task(cfg, &data),
        Kind::Noise => noise(cfg, &data),
        Kind::Spectrum => spectra(cfg, &data),
    }
}

fn quantum_methods(cfg: &RunConfig) -> Result<Vec<Method>, CliError> {
    let mode = cfg.execution_mode()?;
    Ok(cfg
        .qubits
        .iter()
        .map(|&n_qubits| Method::Qsvc { n_qubits, mode })
        .collect())
}

fn methods(cfg: &RunConfig) -> Result<Vec<Method>, CliError> {
    let mut out = Vec::new();
    if matches!(cfg.method.as_str(), "all" | "svc") {
        out.push(Method::Svc);
    }
    if cfg.kind == Kind::Main {
        if matches!(cfg.method.as_str(), "all" | "knn") {
            out.push(Method::Knn);
        }
        if matches!(cfg.method.as_str(), "all" | "dt") {
            out.push(Method::Dt);
        }
    }
    if matches!(cfg.method.as_str(), "all" | "qsvc") {
        out.extend(quantum_methods(cfg)?);
    }
    Ok(out)
}

/// Features and preprocessing mode for a run on `raw`.
fn prepared(cfg: &RunConfig, raw: &FeatureMatrix) -> Result<(FeatureMatrix, Preprocessing), CliError> {
    if cfg.pca_per_split {
        Ok((raw.clone(), Preprocessing::PerSplit { k: cfg.components }))
    } else {
        Ok((preprocess(raw, cfg.components)?, Preprocessing::Global))
    }
}

fn save_reports(cfg: &RunConfig, reports: &[ExperimentReport]) -> Result<(), CliError> {
    let mut summary = String::from("name,mean_acc,std_acc,config_digest\n");
    for r in reports {
        r.check_consistency()?;
        r.write_json(&cfg.out.join(format!("{}.json", r.name)))?;
        r.write_csv(&cfg.out.join(format!("{}.csv", r.name)))?;
        summary.push_str(&format!("{},{},{},{}\n", r.name, r.mean_acc, r.std_acc, r.config_digest));
        println!("{}", r.summary());
    }
    write(&cfg.out.join("summary.csv"), &summary)
}

fn main_table(cfg: &RunConfig, data: &FeatureMatrix) -> Result<(), CliError> {
    let (x, pre) = prepared(cfg, data)?;
    let plan = make_splits(x.n_rows(), SplitConfig::train_val_test(cfg.splits, cfg.seed))?;
    let custom = match &cfg.grid {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read grid {}: {e}", path.display())))?;
            Some(serde_json::from_str::<GridSpec>(&text).map_err(|e| CliError::Usage(format!("grid {}: {e}", path.display())))?)
        }
        None => None,
    };
    let mut reports = Vec::new();
    for method in methods(cfg)? {
        let grid = match &custom {
            Some(g) => GridSpec {
                method,
                axes: g.axes.clone(),
            },
            None => GridSpec::default_for(method),
        };
        eprintln!("{}: {} grid points x {} splits", method.name(), grid.points().len(), cfg.splits);
        reports.push(run_grid_cv_with(&x, &grid, &plan, pre)?);
    }
    save_reports(cfg, &reports)
}

fn load_reports(cfg: &RunConfig) -> Result<Vec<ExperimentReport>, CliError> {
    cfg.from_report
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| CliError::Data(format!("cannot read report {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("report {}: {e}", p.display())))
        })
        .collect()
}

/// Most frequently chosen hyperparameters for `method` among the given
/// main-run reports; the built-in default when none matches.
fn modal_for(method: Method, reports: &[ExperimentReport], bandwidth: f64) -> Result<Hyper, CliError> {
    let matching = |r: &&ExperimentReport| match (method, r.method) {
        (Method::Svc, Method::Svc) => true,
        (Method::Qsvc { n_qubits: a, .. }, Method::Qsvc { n_qubits: b, .. }) => a == b,
        _ => false,
    };
    let any_quantum = |r: &&ExperimentReport| matches!((method, r.method), (Method::Qsvc { .. }, Method::Qsvc { .. }));
    let source = reports.iter().find(matching).or_else(|| reports.iter().find(any_quantum));
    Ok(match (source, method) {
        (Some(r), _) => {
            let h = r.modal_hyper()?;
            eprintln!("{}: modal hyperparameters from {}: {}", method.name(), r.name, h.key());
            h
        }
        (None, Method::Svc) => Hyper::default_svc(),
        (None, _) => Hyper::default_qsvc(bandwidth),
    })
}

fn subsample(cfg: &RunConfig, data: &FeatureMatrix) -> Result<(), CliError> {
    let sources = load_reports(cfg)?;
    let mut reports = Vec::new();
    for cat in cfg.categories()? {
        let (x, pre) = prepared(cfg, &select_task_features(data, &cat.tasks())?)?;
        let plan = make_splits(x.n_rows(), SplitConfig::train_test(cfg.splits, cfg.seed))?;
        for method in methods(cfg)? {
            let hyper = modal_for(method, &sources, cfg.bandwidth)?;
            let mut r = run_fixed_with(&x, method, hyper, &plan, pre)?;
            r.name = format!("{}-{}", cat.name(), method.name());
            reports.push(r);
        }
    }
    save_reports(cfg, &reports)
}

fn per_task(cfg: &RunConfig, data: &FeatureMatrix) -> Result<(), CliError> {
    let sources = load_reports(cfg)?;
    let split_config = if cfg.member_grid {
        SplitConfig::train_val_test(cfg.splits, cfg.seed)
    } else {
        SplitConfig::train_test(cfg.splits, cfg.seed)
    };
    let plan = make_splits(data.n_rows(), split_config)?;
    let mut reports = Vec::new();
    for method in methods(cfg)? {
        let key = if matches!(method, Method::Svc) { "svc" } else { "qsvc" };
        let tasks = cfg.task_list(key)?;
        let selection = if cfg.member_grid {
            MemberSelection::Grid {
                grid: GridSpec::default_for(method),
            }
        } else {
            MemberSelection::Fixed {
                hyper: modal_for(method, &sources, cfg.bandwidth)?,
            }
        };
        eprintln!("{}: {} task members", method.name(), tasks.len());
        reports.push(per_task_ensemble(data, method, &selection, &plan, &tasks)?);
    }
    save_reports(cfg, &reports)
}

fn noise(cfg: &RunConfig, data: &FeatureMatrix) -> Result<(), CliError> {
    let x = preprocess(data, cfg.components)?;
    let plan = make_splits(x.n_rows(), SplitConfig::train_test(1, cfg.seed))?;
    let specs = cfg
        .qubits
        .iter()
        .map(|&q| build_ansatz(q, cfg.components, cfg.bandwidth))
        .collect::<qks_core::Result<Vec<_>>>()?;
    let report = noise_study(
        &x,
        &specs,
        &cfg.noise_model(),
        cfg.runs,
        &plan.splits[0],
        SvmParams::new(1.0, 1e-3),
    )?;
    write(&cfg.out.join("noise.json"), &(report.to_json()? + "\n"))?;
    let mut csv = String::from("n_qubits,bandwidth,exact_acc,baseline_acc,median_run_acc,majority_acc,run_accs\n");
    for e in &report.entries {
        let runs: Vec<String> = e.run_accs.iter().map(|a| format!("{a}")).collect();
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.n_qubits,
            e.bandwidth,
            e.exact_acc,
            e.baseline_acc,
            e.median_run_acc,
            e.majority_acc,
            runs.join(";")
        ));
        println!(
            "{}q: exact {:.2}%, {} shots {:.2}%, noisy median {:.2}%, majority of {} {:.2}%",
            e.n_qubits,
            e.exact_acc,
            cfg.shots,
            e.baseline_acc,
            e.median_run_acc,
            cfg.runs,
            e.majority_acc
        );
    }
    write(&cfg.out.join("noise.csv"), &csv)
}

#[derive(Serialize)]
struct SpectrumEntry {
    n_qubits: usize,
    bandwidth: f64,
    /// lambda_1 / lambda_100, when the Gram has at least 100 rows.
    decay_ratio_100: Option<f64>,
    min_eigenvalue: f64,
    spectrum: Spectrum,
}

fn spectra(cfg: &RunConfig, data: &FeatureMatrix) -> Result<(), CliError> {
    let x = preprocess(data, cfg.components)?;
    let mode = cfg.execution_mode()?;
    let ids: Vec<usize> = (0..x.n_rows()).collect();
    let mut entries = Vec::new();
    for &q in &cfg.qubits {
        let kernel = KernelParams::quantum(build_ansatz(q, cfg.components, cfg.bandwidth)?).resolve(&x, mode)?;
        let s = spectrum(&gram_symmetric(&x, &ids, &kernel)?)?;
        let entry = SpectrumEntry {
            n_qubits: q,
            bandwidth: cfg.bandwidth,
            decay_ratio_100: s.decay_ratio(100),
            min_eigenvalue: s.min(),
            spectrum: s,
        };
        match entry.decay_ratio_100 {
            Some(r) => println!("{q}q: lambda_1/lambda_100 = {r:.4e}, min eigenvalue {:.3e}", entry.min_eigenvalue),
            None => println!("{q}q: fewer than 100 eigenvalues, min eigenvalue {:.3e}", entry.min_eigenvalue),
        }
        entries.push(entry);
    }

    let mut csv = String::from("index");
    for e in &entries {
        csv.push_str(&format!(",{}q", e.n_qubits));
    }
    csv.push('\n');
    for i in 0..x.n_rows() {
        csv.push_str(&(i + 1).to_string());
        for e in &entries {
            csv.push_str(&format!(",{:e}", e.spectrum.eigenvalues[i]));
        }
        csv.push('\n');
    }
    write(&cfg.out.join("eigenvalues.csv"), &csv)?;
    write_json(&cfg.out.join("spectrum.json"), &entries)?;
    let series: Vec<Series> = entries
        .iter()
        .map(|e| Series {
            label: format!("{}-qubits", e.n_qubits),
            values: e.spectrum.eigenvalues.clone(),
        })
        .collect();
    write(
        &cfg.out.join("spectrum.svg"),
        &log_plot("Gram matrix eigenvalues", "index", "eigenvalue", &series),
    )
}
