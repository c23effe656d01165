use serde::{Deserialize, Serialize};

use crate::classifiers::{Criterion, Metric, Weights};
use crate::error::{invalid, Result};
use crate::kernels::{ExecutionMode, Gamma, KernelKind};

/// Learning method of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Method {
    Svc,
    Knn,
    Dt,
    Qsvc { n_qubits: usize, mode: ExecutionMode },
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Svc => "svc".into(),
            Method::Knn => "knn".into(),
            Method::Dt => "dt".into(),
            Method::Qsvc { n_qubits, .. } => format!("qsvc-{n_qubits}q"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitterKind {
    Best,
    Random,
}

/// One point of a hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Hyper {
    Svc {
        kernel: KernelKind,
        c: f64,
        gamma: Gamma,
        tol: f64,
    },
    Knn {
        k: usize,
        metric: Metric,
        weights: Weights,
    },
    Dt {
        criterion: Criterion,
        splitter: SplitterKind,
        max_depth: Option<usize>,
        min_samples_split: usize,
        min_samples_leaf: usize,
    },
    Qsvc {
        bandwidth: f64,
        c: f64,
        tol: f64,
    },
}

impl Hyper {
    /// Canonical text form, used to count modal choices.
    pub fn key(&self) -> String {
        serde_json::to_string(self).expect("hyperparameters serialize")
    }

    pub fn default_svc() -> Hyper {
        Hyper::Svc {
            kernel: KernelKind::Rbf,
            c: 1.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
        }
    }

    pub fn default_qsvc(bandwidth: f64) -> Hyper {
        Hyper::Qsvc {
            bandwidth,
            c: 1.0,
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvcAxes {
    pub kernel: Vec<KernelKind>,
    pub c: Vec<f64>,
    pub gamma: Vec<Gamma>,
    pub tol: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnAxes {
    pub k: Vec<usize>,
    pub metric: Vec<Metric>,
    pub weights: Vec<Weights>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtAxes {
    pub criterion: Vec<Criterion>,
    pub splitter: Vec<SplitterKind>,
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_split: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsvcAxes {
    pub bandwidth: Vec<f64>,
    pub c: Vec<f64>,
    pub tol: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axes", rename_all = "lowercase")]
pub enum Axes {
    Svc(SvcAxes),
    Knn(KnnAxes),
    Dt(DtAxes),
    Qsvc(QsvcAxes),
}

/// Candidate hyperparameters of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub method: Method,
    pub axes: Axes,
}

impl GridSpec {
    /// Default search ranges per method.
    pub fn default_for(method: Method) -> GridSpec {
        let axes = match method {
            Method::Svc => Axes::Svc(SvcAxes {
                kernel: vec![KernelKind::Rbf, KernelKind::Linear, KernelKind::Poly, KernelKind::Sigmoid],
                c: vec![0.1, 1.0, 10.0, 100.0],
                gamma: vec![Gamma::Scale, Gamma::Value(0.001), Gamma::Value(0.01), Gamma::Value(0.1)],
                tol: vec![1e-3, 1e-4],
            }),
            Method::Knn => Axes::Knn(KnnAxes {
                k: vec![3, 5, 7, 9, 11],
                metric: vec![Metric::Euclidean, Metric::Manhattan],
                weights: vec![Weights::Uniform, Weights::Distance],
            }),
            Method::Dt => Axes::Dt(DtAxes {
                criterion: vec![Criterion::Gini, Criterion::Entropy],
                splitter: vec![SplitterKind::Best, SplitterKind::Random],
                max_depth: vec![Some(3), Some(5), Some(10), None],
                min_samples_split: vec![2, 5, 10],
                min_samples_leaf: vec![1, 2, 5],
            }),
            Method::Qsvc { .. } => Axes::Qsvc(QsvcAxes {
                bandwidth: vec![0.1, 0.2, 0.4, 0.6, 0.8, 1.0],
                c: vec![1.0],
                tol: vec![1e-3],
            }),
        };
        GridSpec { method, axes }
    }

    /// A grid holding exactly one point.
    pub fn single(method: Method, hyper: Hyper) -> Result<GridSpec> {
        let axes = match hyper {
            Hyper::Svc { kernel, c, gamma, tol } => Axes::Svc(SvcAxes {
                kernel: vec![kernel],
                c: vec![c],
                gamma: vec![gamma],
                tol: vec![tol],
            }),
            Hyper::Knn { k, metric, weights } => Axes::Knn(KnnAxes {
                k: vec![k],
                metric: vec![metric],
                weights: vec![weights],
            }),
            Hyper::Dt {
                criterion,
                splitter,
                max_depth,
                min_samples_split,
                min_samples_leaf,
            } => Axes::Dt(DtAxes {
                criterion: vec![criterion],
                splitter: vec![splitter],
                max_depth: vec![max_depth],
                min_samples_split: vec![min_samples_split],
                min_samples_leaf: vec![min_samples_leaf],
            }),
            Hyper::Qsvc { bandwidth, c, tol } => Axes::Qsvc(QsvcAxes {
                bandwidth: vec![bandwidth],
                c: vec![c],
                tol: vec![tol],
            }),
        };
        let grid = GridSpec { method, axes };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let lens: Vec<usize> = match &self.axes {
            Axes::Svc(a) => vec![a.kernel.len(), a.c.len(), a.gamma.len(), a.tol.len()],
            Axes::Knn(a) => vec![a.k.len(), a.metric.len(), a.weights.len()],
            Axes::Dt(a) => vec![
                a.criterion.len(),
                a.splitter.len(),
                a.max_depth.len(),
                a.min_samples_split.len(),
                a.min_samples_leaf.len(),
            ],
            Axes::Qsvc(a) => vec![a.bandwidth.len(), a.c.len(), a.tol.len()],
        };
        if lens.contains(&0) {
            return Err(invalid("every grid axis needs at least one value"));
        }
        let consistent = matches!(
            (&self.method, &self.axes),
            (Method::Svc, Axes::Svc(_))
                | (Method::Knn, Axes::Knn(_))
                | (Method::Dt, Axes::Dt(_))
                | (Method::Qsvc { .. }, Axes::Qsvc(_))
        );
        if !consistent {
            return Err(invalid(format!("grid axes do not belong to method {}", self.method.name())));
        }
        Ok(())
    }

    /// Cartesian product in axis order (first axis outermost). The linear
    /// kernel ignores gamma, so only its first gamma value is kept.
    pub fn points(&self) -> Vec<Hyper> {
        let mut out = Vec::new();
        match &self.axes {
            Axes::Svc(a) => {
                for &kernel in &a.kernel {
                    for &c in &a.c {
                        let gammas = if kernel == KernelKind::Linear {
                            &a.gamma[..1]
                        } else {
                            &a.gamma[..]
                        };
                        for &gamma in gammas {
                            for &tol in &a.tol {
                                out.push(Hyper::Svc { kernel, c, gamma, tol });
                            }
                        }
                    }
                }
            }
            Axes::Knn(a) => {
                for &k in &a.k {
                    for &metric in &a.metric {
                        for &weights in &a.weights {
                            out.push(Hyper::Knn { k, metric, weights });
                        }
                    }
                }
            }
            Axes::Dt(a) => {
                for &criterion in &a.criterion {
                    for &splitter in &a.splitter {
                        for &max_depth in &a.max_depth {
                            for &min_samples_split in &a.min_samples_split {
                                for &min_samples_leaf in &a.min_samples_leaf {
                                    out.push(Hyper::Dt {
                                        criterion,
                                        splitter,
                                        max_depth,
                                        min_samples_split,
                                        min_samples_leaf,
                                    });
                                }
                            }
                        }
                    }
                }
            }
            Axes::Qsvc(a) => {
                for &bandwidth in &a.bandwidth {
                    for &c in &a.c {
                        for &tol in &a.tol {
                            out.push(Hyper::Qsvc { bandwidth, c, tol });
                        }
                    }
                }
            }
        }
        out
    }
}
