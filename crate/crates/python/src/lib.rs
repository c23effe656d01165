//! Python bindings: datasets, encoding circuits, kernel Grams and the SVM.

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qks_core::classifiers::{svm_fit, SvmModel, SvmParams};
use qks_core::data::{self, FeatureMatrix, Label};
use qks_core::eval::majority_vote as vote;
use qks_core::kernels::{self, ExecutionMode, Gamma, GramMatrix, Kernel as CoreKernel, KernelKind, KernelParams};
use qks_core::sim::{self, CircuitSpec};
use qks_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidArgument(_) | Error::Dimension(_) => PyValueError::new_err(e.to_string()),
        e if e.is_data_error() => PyIOError::new_err(e.to_string()),
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_labels(labels: &[String]) -> PyResult<Vec<Label>> {
    labels
        .iter()
        .map(|l| Label::parse(l).ok_or_else(|| PyValueError::new_err(format!("label {l:?} is not P or H"))))
        .collect()
}

fn label_strings(labels: &[Label]) -> Vec<String> {
    labels.iter().map(|l| l.to_string()).collect()
}

/// A labelled feature table (rows are subjects).
#[pyclass(module = "qks", frozen)]
struct Dataset {
    inner: FeatureMatrix,
}

#[pymethods]
impl Dataset {
    #[new]
    fn new(rows: Vec<Vec<f64>>, labels: Vec<String>) -> PyResult<Self> {
        let labels = parse_labels(&labels)?;
        Ok(Dataset {
            inner: FeatureMatrix::from_rows(&rows, labels).map_err(py_err)?,
        })
    }

    /// Reads and validates a DARWIN CSV.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Dataset {
            inner: data::load_darwin(&path).map_err(py_err)?,
        })
    }

    /// Random data with the DARWIN column layout.
    #[staticmethod]
    #[pyo3(signature = (n_patients, n_healthy, separation = 2.0, seed = 0))]
    fn synthetic(n_patients: usize, n_healthy: usize, separation: f64, seed: u64) -> PyResult<Self> {
        Ok(Dataset {
            inner: qks_core::synth::synthetic_darwin(n_patients, n_healthy, separation, seed).map_err(py_err)?,
        })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.n_rows(), self.inner.n_cols())
    }

    #[getter]
    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        label_strings(self.inner.labels())
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.column_names().to_vec()
    }

    /// Standardize, project on `components` principal axes, standardize again.
    fn preprocess(&self, components: usize) -> PyResult<Self> {
        Ok(Dataset {
            inner: data::preprocess(&self.inner, components).map_err(py_err)?,
        })
    }

    /// Keeps the 18 feature columns of each listed task (1-25).
    fn select_tasks(&self, tasks: Vec<usize>) -> PyResult<Self> {
        Ok(Dataset {
            inner: data::select_task_features(&self.inner, &tasks).map_err(py_err)?,
        })
    }

    fn select_rows(&self, idx: Vec<usize>) -> PyResult<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.inner.n_rows()) {
            return Err(PyValueError::new_err(format!("row {bad} out of range")));
        }
        Ok(Dataset {
            inner: self.inner.select_rows(&idx),
        })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_csv(&path).map_err(py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} rows x {} columns, {} P / {} H)",
            self.inner.n_rows(),
            self.inner.n_cols(),
            self.inner.count_label(Label::Patient),
            self.inner.count_label(Label::Healthy)
        )
    }
}

/// Data-encoding circuit.
#[pyclass(module = "qks", frozen)]
struct Circuit {
    inner: CircuitSpec,
}

#[pymethods]
impl Circuit {
    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits
    }

    #[getter]
    fn n_params(&self) -> usize {
        self.inner.n_params
    }

    #[getter]
    fn bandwidth(&self) -> f64 {
        self.inner.bandwidth
    }

    fn with_bandwidth(&self, bandwidth: f64) -> PyResult<Self> {
        Ok(Circuit {
            inner: self.inner.with_bandwidth(bandwidth).map_err(py_err)?,
        })
    }

    /// Amplitudes of U(x)|0...0>, qubit 0 the least significant bit.
    fn encode(&self, x: Vec<f64>) -> PyResult<Vec<Complex64>> {
        Ok(sim::encode(&self.inner, &x).map_err(py_err)?.amplitudes().to_vec())
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Circuit {
            inner: CircuitSpec::from_json(text).map_err(py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Circuit(n_qubits={}, n_params={}, bandwidth={})",
            self.inner.n_qubits, self.inner.n_params, self.inner.bandwidth
        )
    }
}

#[pyfunction]
fn build_ansatz(n_qubits: usize, n_params: usize, bandwidth: f64) -> PyResult<Circuit> {
    Ok(Circuit {
        inner: sim::build_ansatz(n_qubits, n_params, bandwidth).map_err(py_err)?,
    })
}

/// |<psi(x)|psi(y)>|^2, or its estimate from `shots` inversion-test runs.
#[pyfunction]
#[pyo3(signature = (circuit, x, y, shots = None, seed = 0))]
fn fidelity(circuit: &Circuit, x: Vec<f64>, y: Vec<f64>, shots: Option<u64>, seed: u64) -> PyResult<f64> {
    match shots {
        None => sim::inversion_probability(&circuit.inner, &x, &y).map_err(py_err),
        Some(n) => sim::fidelity_shots(&circuit.inner, &x, &y, n, seed).map_err(py_err),
    }
}

/// A kernel with all parameters fixed.
#[pyclass(module = "qks", frozen)]
struct Kernel {
    inner: CoreKernel,
}

#[pymethods]
impl Kernel {
    /// Classical kernel; `gamma="scale"` resolves against `fit`.
    #[staticmethod]
    #[pyo3(signature = (kind, fit, gamma = None, coef0 = 0.0, degree = 3))]
    fn classical(kind: &str, fit: &Dataset, gamma: Option<f64>, coef0: f64, degree: u32) -> PyResult<Self> {
        let kind = match KernelKind::parse(kind) {
            Some(KernelKind::Quantum) | None => {
                return Err(PyValueError::new_err(format!("{kind:?} is not rbf, linear, poly or sigmoid")))
            }
            Some(k) => k,
        };
        let params = KernelParams {
            coef0,
            degree,
            ..KernelParams::classical(kind, gamma.map_or(Gamma::Scale, Gamma::Value))
        };
        Ok(Kernel {
            inner: params.resolve(&fit.inner, ExecutionMode::Exact).map_err(py_err)?,
        })
    }

    /// Fidelity kernel, exact or sampled with `shots` per entry.
    #[staticmethod]
    #[pyo3(signature = (circuit, shots = None, seed = 0))]
    fn quantum(circuit: &Circuit, shots: Option<u64>, seed: u64) -> PyResult<Self> {
        let mode = match shots {
            None => ExecutionMode::Exact,
            Some(0) => return Err(PyValueError::new_err("shots must be positive")),
            Some(shots) => ExecutionMode::Shots { shots, seed },
        };
        circuit.inner.validate().map_err(py_err)?;
        Ok(Kernel {
            inner: CoreKernel::Quantum {
                circuit: circuit.inner.clone(),
                mode,
            },
        })
    }

    fn value(&self, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.inner.value(&x, &y).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Kernel matrix between two sample sets.
#[pyclass(module = "qks", frozen)]
struct Gram {
    inner: GramMatrix,
}

#[pymethods]
impl Gram {
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.n_rows, self.inner.n_cols)
    }

    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        (0..self.inner.n_rows).map(|i| self.inner.row(i).to_vec()).collect()
    }

    /// Eigenvalues, largest first.
    fn spectrum(&self) -> PyResult<Vec<f64>> {
        Ok(kernels::spectrum(&self.inner).map_err(py_err)?.eigenvalues)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(&path).map_err(py_err)
    }
}

/// Square Gram of `rows`, or the `rows` x `train` Gram for prediction.
///
/// Training samples get ids 0..len(train) in both cases, so a cross Gram
/// lines up with a model fitted on `gram(kernel, train)`.
#[pyfunction]
#[pyo3(signature = (kernel, rows, train = None))]
fn gram(py: Python<'_>, kernel: &Kernel, rows: &Dataset, train: Option<&Dataset>) -> PyResult<Gram> {
    let k = &kernel.inner;
    let result = py.detach(|| match train {
        None => {
            let ids: Vec<usize> = (0..rows.inner.n_rows()).collect();
            kernels::gram_symmetric(&rows.inner, &ids, k)
        }
        Some(train) => {
            let m = train.inner.n_rows();
            let cid: Vec<usize> = (0..m).collect();
            let rid: Vec<usize> = (m..m + rows.inner.n_rows()).collect();
            kernels::gram_cross(&rows.inner, &rid, &train.inner, &cid, k)
        }
    });
    Ok(Gram {
        inner: result.map_err(py_err)?,
    })
}

/// Soft-margin SVM on a precomputed kernel.
#[pyclass(module = "qks", frozen)]
struct Svm {
    inner: SvmModel,
}

#[pymethods]
impl Svm {
    #[staticmethod]
    #[pyo3(signature = (gram, labels, c = 1.0, tol = 1e-3))]
    fn fit(py: Python<'_>, gram: &Gram, labels: Vec<String>, c: f64, tol: f64) -> PyResult<Self> {
        let labels = parse_labels(&labels)?;
        let model = py
            .detach(|| svm_fit(&gram.inner, &labels, SvmParams::new(c, tol)))
            .map_err(py_err)?;
        model.check_invariants().map_err(py_err)?;
        Ok(Svm { inner: model })
    }

    fn decision_function(&self, gram: &Gram) -> PyResult<Vec<f64>> {
        self.inner.decision_function(&gram.inner).map_err(py_err)
    }

    fn predict(&self, gram: &Gram) -> PyResult<Vec<String>> {
        let d = self.decision_function(gram)?;
        Ok(d.into_iter().map(|v| Label::from_decision(v).to_string()).collect())
    }

    #[getter]
    fn alphas(&self) -> Vec<f64> {
        self.inner.alphas.clone()
    }

    #[getter]
    fn bias(&self) -> f64 {
        self.inner.bias
    }

    #[getter]
    fn support(&self) -> Vec<usize> {
        self.inner.support_idx.clone()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }
}

/// Per-sample majority of "P"/"H" predictions; ties go to "P".
#[pyfunction]
fn majority_vote(predictions: Vec<Vec<String>>) -> PyResult<Vec<String>> {
    let parsed = predictions.iter().map(|p| parse_labels(p)).collect::<PyResult<Vec<_>>>()?;
    Ok(label_strings(&vote(&parsed).map_err(py_err)?))
}

#[pymodule]
fn qks(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Circuit>()?;
    m.add_class::<Kernel>()?;
    m.add_class::<Gram>()?;
    m.add_class::<Svm>()?;
    m.add_function(wrap_pyfunction!(build_ansatz, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(gram, m)?)?;
    m.add_function(wrap_pyfunction!(majority_vote, m)?)?;
    Ok(())
}
