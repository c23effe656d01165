//! Classical kernel functions, quantum fidelity kernels and Gram matrices.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FeatureMatrix;
use crate::error::{dim, invalid, Error, Result};
use crate::sim::{self, CircuitSpec, NoiseModel, StateVector};

/// Eigenvalues below this are reported as PSD violations.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Rbf,
    Linear,
    Poly,
    Sigmoid,
    Quantum,
}

impl KernelKind {
    pub fn parse(s: &str) -> Option<KernelKind> {
        match s.to_ascii_lowercase().as_str() {
            "rbf" => Some(KernelKind::Rbf),
            "linear" => Some(KernelKind::Linear),
            "poly" => Some(KernelKind::Poly),
            "sigmoid" => Some(KernelKind::Sigmoid),
            "quantum" => Some(KernelKind::Quantum),
            _ => None,
        }
    }
}

/// Kernel coefficient: a fixed value or `1 / (D * var(X))` of the fit data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    Scale,
    Value(f64),
}

impl Gamma {
    pub fn resolve(self, data: &FeatureMatrix) -> f64 {
        match self {
            Gamma::Value(g) => g,
            Gamma::Scale => {
                let vals = data.values();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                if var > 0.0 {
                    1.0 / (data.n_cols() as f64 * var)
                } else {
                    1.0
                }
            }
        }
    }
}

/// How quantum fidelities are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ExecutionMode {
    Exact,
    Shots { shots: u64, seed: u64 },
    Noisy { noise: NoiseModel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub kind: KernelKind,
    pub gamma: Gamma,
    pub coef0: f64,
    pub degree: u32,
    pub circuit: Option<CircuitSpec>,
}

impl KernelParams {
    pub fn classical(kind: KernelKind, gamma: Gamma) -> Self {
        Self {
            kind,
            gamma,
            coef0: 0.0,
            degree: 3,
            circuit: None,
        }
    }

    pub fn quantum(circuit: CircuitSpec) -> Self {
        Self {
            kind: KernelKind::Quantum,
            gamma: Gamma::Scale,
            coef0: 0.0,
            degree: 3,
            circuit: Some(circuit),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            KernelKind::Quantum => {
                self.circuit
                    .as_ref()
                    .ok_or_else(|| invalid("quantum kernel needs a circuit"))?
                    .validate()?;
            }
            KernelKind::Poly if self.degree < 1 => {
                return Err(invalid("polynomial degree must be at least 1"))
            }
            _ => {}
        }
        if let Gamma::Value(g) = self.gamma {
            if !(g.is_finite() && g > 0.0) {
                return Err(invalid(format!("gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }

    /// Fixes gamma against the data the model is fitted on.
    pub fn resolve(&self, fit_data: &FeatureMatrix, mode: ExecutionMode) -> Result<Kernel> {
        self.validate()?;
        let gamma = self.gamma.resolve(fit_data);
        Ok(match self.kind {
            KernelKind::Rbf => Kernel::Rbf { gamma },
            KernelKind::Linear => Kernel::Linear,
            KernelKind::Poly => Kernel::Poly {
                gamma,
                coef0: self.coef0,
                degree: self.degree,
            },
            KernelKind::Sigmoid => Kernel::Sigmoid {
                gamma,
                coef0: self.coef0,
            },
            KernelKind::Quantum => Kernel::Quantum {
                circuit: self.circuit.clone().expect("validated"),
                mode,
            },
        })
    }
}

/// A kernel with every parameter fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
    Poly { gamma: f64, coef0: f64, degree: u32 },
    Sigmoid { gamma: f64, coef0: f64 },
    Quantum { circuit: CircuitSpec, mode: ExecutionMode },
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

impl Kernel {
    /// k(x, y). Sampled quantum modes draw with their own seed.
    pub fn value(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let seed = match self {
            Kernel::Quantum {
                mode: ExecutionMode::Shots { seed, .. },
                ..
            } => *seed,
            Kernel::Quantum {
                mode: ExecutionMode::Noisy { noise },
                ..
            } => noise.seed,
            _ => 0,
        };
        self.value_seeded(x, y, seed)
    }

    /// k(x, y) with an explicit seed for sampled quantum modes.
    pub fn value_seeded(&self, x: &[f64], y: &[f64], seed: u64) -> Result<f64> {
        if x.len() != y.len() {
            return Err(dim(format!("kernel inputs of length {} and {}", x.len(), y.len())));
        }
        Ok(match self {
            Kernel::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Linear => dot(x, y),
            Kernel::Poly {
                gamma,
                coef0,
                degree,
            } => (gamma * dot(x, y) + coef0).powi(*degree as i32),
            Kernel::Sigmoid { gamma, coef0 } => (gamma * dot(x, y) + coef0).tanh(),
            Kernel::Quantum { circuit, mode } => match mode {
                ExecutionMode::Exact => {
                    sim::fidelity_exact(&sim::encode(circuit, x)?, &sim::encode(circuit, y)?)?
                }
                ExecutionMode::Shots { shots, .. } => sim::fidelity_shots(circuit, x, y, *shots, seed)?,
                ExecutionMode::Noisy { noise } => {
                    sim::fidelity_noisy(circuit, x, y, &noise.with_seed(seed))?
                }
            },
        })
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, Kernel::Quantum { .. })
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the kernel entry between samples `i` and `j`; symmetric in the pair.
pub fn pair_seed(base: u64, i: usize, j: usize) -> u64 {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    mix(mix(mix(base) ^ lo as u64) ^ hi as u64)
}

/// Kernel values between two sample sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    pub values: Vec<f64>,
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_ids: Vec<usize>,
    pub col_ids: Vec<usize>,
    pub kernel: Kernel,
}

impl GramMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Largest |G_ij - G_ji|; `None` for non-square matrices.
    pub fn asymmetry(&self) -> Option<f64> {
        if !self.is_square() {
            return None;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            for j in i + 1..self.n_cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        Some(worst)
    }

    /// Sub-matrix at the given row/column positions.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> GramMatrix {
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            let r = self.row(i);
            values.extend(cols.iter().map(|&j| r[j]));
        }
        GramMatrix {
            values,
            n_rows: rows.len(),
            n_cols: cols.len(),
            row_ids: rows.iter().map(|&i| self.row_ids[i]).collect(),
            col_ids: cols.iter().map(|&j| self.col_ids[j]).collect(),
            kernel: self.kernel.clone(),
        }
    }

    /// Writes the values as CSV and a JSON sidecar (`<path>.json`) with the
    /// kernel, mode, seeds and sample ids.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for i in 0..self.n_rows {
            w.write_record(self.row(i).iter().map(|v| format!("{v:e}")))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        #[derive(Serialize)]
        struct Sidecar<'a> {
            n_rows: usize,
            n_cols: usize,
            row_ids: &'a [usize],
            col_ids: &'a [usize],
            kernel: &'a Kernel,
        }
        let sidecar = Sidecar {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_ids: &self.row_ids,
            col_ids: &self.col_ids,
            kernel: &self.kernel,
        };
        let side_path = path.with_extension("json");
        std::fs::write(&side_path, serde_json::to_string_pretty(&sidecar)?)
            .map_err(|e| Error::io(side_path, e))
    }
}

fn encode_all(circuit: &CircuitSpec, m: &FeatureMatrix) -> Result<Vec<StateVector>> {
    (0..m.n_rows())
        .into_par_iter()
        .map(|i| sim::encode(circuit, m.row(i)))
        .collect()
}

fn check_ids(m: &FeatureMatrix, ids: &[usize]) -> Result<()> {
    if ids.len() != m.n_rows() {
        return Err(dim(format!("{} ids for {} rows", ids.len(), m.n_rows())));
    }
    Ok(())
}

/// Entry (i, j) of a Gram matrix given global sample ids. Shot and noisy
/// modes draw with `pair_seed(mode seed, id_i, id_j)`; identical samples get
/// 1 without sampling.
fn sampled_entry(
    kernel: &Kernel,
    states: Option<(&StateVector, &StateVector)>,
    x: &[f64],
    y: &[f64],
    id_x: usize,
    id_y: usize,
) -> Result<f64> {
    match kernel {
        Kernel::Quantum { mode, circuit } => {
            if id_x == id_y && !matches!(mode, ExecutionMode::Exact) {
                return Ok(1.0);
            }
            match (mode, states) {
                (ExecutionMode::Exact, Some((a, b))) => sim::fidelity_exact(a, b),
                (ExecutionMode::Shots { shots, seed }, Some((a, b))) => {
                    // Overlap of cached states equals the inversion-test
                    // all-zeros probability.
                    let p = sim::fidelity_exact(a, b)?;
                    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(
                        pair_seed(*seed, id_x, id_y),
                    );
                    Ok(sim::fidelity::sample_count(&mut rng, *shots, p) as f64 / *shots as f64)
                }
                (ExecutionMode::Noisy { noise }, _) => sim::fidelity_noisy(
                    circuit,
                    x,
                    y,
                    &noise.with_seed(pair_seed(noise.seed, id_x, id_y)),
                ),
                _ => kernel.value(x, y),
            }
        }
        _ => kernel.value(x, y),
    }
}

/// Square Gram of one sample set. Only the upper triangle is computed and
/// then mirrored, so the result is exactly symmetric in every mode.
pub fn gram_symmetric(rows: &FeatureMatrix, ids: &[usize], kernel: &Kernel) -> Result<GramMatrix> {
    check_ids(rows, ids)?;
    let n = rows.n_rows();
    let states = match kernel {
        Kernel::Quantum { circuit, mode } if !matches!(mode, ExecutionMode::Noisy { .. }) => {
            Some(encode_all(circuit, rows)?)
        }
        _ => None,
    };
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    let st = states.as_ref().map(|s| (&s[i], &s[j]));
                    sampled_entry(kernel, st, rows.row(i), rows.row(j), ids[i], ids[j])
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, v) in row.iter().enumerate() {
            let j = i + off;
            values[i * n + j] = *v;
            values[j * n + i] = *v;
        }
    }
    Ok(GramMatrix {
        values,
        n_rows: n,
        n_cols: n,
        row_ids: ids.to_vec(),
        col_ids: ids.to_vec(),
        kernel: kernel.clone(),
    })
}

/// Rectangular Gram: rows are typically test samples, columns training samples.
pub fn gram_cross(
    rows: &FeatureMatrix,
    row_ids: &[usize],
    cols: &FeatureMatrix,
    col_ids: &[usize],
    kernel: &Kernel,
) -> Result<GramMatrix> {
    check_ids(rows, row_ids)?;
    check_ids(cols, col_ids)?;
    if rows.n_cols() != cols.n_cols() {
        return Err(dim(format!(
            "row samples have {} features, column samples {}",
            rows.n_cols(),
            cols.n_cols()
        )));
    }
    let (rs, cs) = match kernel {
        Kernel::Quantum { circuit, mode } if !matches!(mode, ExecutionMode::Noisy { .. }) => {
            (Some(encode_all(circuit, rows)?), Some(encode_all(circuit, cols)?))
        }
        _ => (None, None),
    };
    let values: Vec<Vec<f64>> = (0..rows.n_rows())
        .into_par_iter()
        .map(|i| {
            (0..cols.n_rows())
                .map(|j| {
                    let st = rs.as_ref().zip(cs.as_ref()).map(|(r, c)| (&r[i], &c[j]));
                    sampled_entry(kernel, st, rows.row(i), cols.row(j), row_ids[i], col_ids[j])
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(GramMatrix {
        values: values.into_iter().flatten().collect(),
        n_rows: rows.n_rows(),
        n_cols: cols.n_rows(),
        row_ids: row_ids.to_vec(),
        col_ids: col_ids.to_vec(),
        kernel: kernel.clone(),
    })
}

/// Convenience: Gram of `rows` against `cols` with positional ids; square
/// symmetric when both are the same matrix.
pub fn gram(rows: &FeatureMatrix, cols: &FeatureMatrix, kernel: &Kernel) -> Result<GramMatrix> {
    if std::ptr::eq(rows, cols) || rows == cols {
        let ids: Vec<usize> = (0..rows.n_rows()).collect();
        return gram_symmetric(rows, &ids, kernel);
    }
    let rid: Vec<usize> = (0..rows.n_rows()).collect();
    let cid: Vec<usize> = (rows.n_rows()..rows.n_rows() + cols.n_rows()).collect();
    gram_cross(rows, &rid, cols, &cid, kernel)
}

/// Eigenvalues of a symmetric Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Nonincreasing.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues below `-PSD_TOL`.
    pub psd_violations: Vec<f64>,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    /// lambda_1 / lambda_k (1-based), `None` when k exceeds the size.
    pub fn decay_ratio(&self, k: usize) -> Option<f64> {
        let last = *self.eigenvalues.get(k.checked_sub(1)?)?;
        Some(self.eigenvalues[0] / last)
    }
}

pub fn spectrum(g: &GramMatrix) -> Result<Spectrum> {
    if !g.is_square() {
        return Err(dim(format!(
            "spectrum of a non-square {}x{} matrix",
            g.n_rows, g.n_cols
        )));
    }
    let n = g.n_rows;
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| 0.5 * (g.get(i, j) + g.get(j, i)));
    let mut eigenvalues: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let psd_violations = eigenvalues.iter().copied().filter(|&l| l < -PSD_TOL).collect();
    Ok(Spectrum {
        eigenvalues,
        psd_violations,
    })
}
