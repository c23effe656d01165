use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::circuit::{run, CircuitSpec};
use super::gate::Matrix2;
use super::state::{apply_single, StateVector};
use crate::error::{dim, invalid, Error, Result};

/// Widest register accepted by density-matrix routines.
pub const MAX_DENSITY_QUBITS: usize = 6;

const DENSITY_TOL: f64 = 1e-8;

/// |<a|b>|^2
pub fn fidelity_exact(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Probability of reading all zeros after U(x) then U(y)^-1.
pub fn inversion_probability(spec: &CircuitSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    let state = run(spec.n_qubits, &spec.inversion_test(x, y)?)?;
    Ok(state.amplitudes()[0].norm_sqr().min(1.0))
}

/// Shot-sampled inversion test: `shots` Bernoulli draws of the all-zeros
/// outcome.
pub fn fidelity_shots(spec: &CircuitSpec, x: &[f64], y: &[f64], shots: u64, seed: u64) -> Result<f64> {
    if shots == 0 {
        return Err(invalid("shots must be at least 1"));
    }
    let p = inversion_probability(spec, x, y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_count(&mut rng, shots, p) as f64 / shots as f64)
}

pub(crate) fn sample_count(rng: &mut ChaCha8Rng, trials: u64, p: f64) -> u64 {
    let p = p.clamp(0.0, 1.0);
    if p == 0.0 || trials == 0 {
        return 0;
    }
    if p == 1.0 {
        return trials;
    }
    Binomial::new(trials, p)
        .expect("probability clamped to [0, 1]")
        .sample(rng)
}

/// Density operator on at most [`MAX_DENSITY_QUBITS`] qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    rho: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_matrix(rho: DMatrix<Complex64>) -> Result<Self> {
        let d = rho.nrows();
        if d != rho.ncols() || d < 2 || !d.is_power_of_two() {
            return Err(dim(format!("{}x{} is not a qubit density matrix", d, rho.ncols())));
        }
        let n_qubits = d.trailing_zeros() as usize;
        if n_qubits > MAX_DENSITY_QUBITS {
            return Err(dim(format!(
                "density matrices are limited to {MAX_DENSITY_QUBITS} qubits"
            )));
        }
        let out = Self { n_qubits, rho };
        out.check()?;
        Ok(out)
    }

    pub fn pure(state: &StateVector) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self::from_matrix(&v * v.adjoint())
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        let d = 1usize << n_qubits;
        Self::from_matrix(DMatrix::identity(d, d) / Complex64::new(d as f64, 0.0))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.trace()
    }

    /// <index|rho|index>
    pub fn population(&self, index: usize) -> f64 {
        self.rho[(index, index)].re
    }

    /// Rejects matrices that are not Hermitian, unit-trace and PSD.
    pub fn check(&self) -> Result<()> {
        let herm_defect = (&self.rho - self.rho.adjoint()).camax();
        if herm_defect > DENSITY_TOL {
            return Err(Error::Numerical(format!("not Hermitian (defect {herm_defect:e})")));
        }
        let tr = self.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > DENSITY_TOL {
            return Err(Error::Numerical(format!("trace {tr} is not 1")));
        }
        let min = self.hermitian_eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -DENSITY_TOL {
            return Err(Error::Numerical(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    fn hermitian_eigenvalues(&self) -> Vec<f64> {
        hermitian_part(&self.rho).symmetric_eigenvalues().iter().copied().collect()
    }

    /// Conjugates by a 2x2 operator on `qubit`: K rho K^dagger.
    pub(crate) fn conjugate_single(&self, qubit: usize, k: &Matrix2) -> DMatrix<Complex64> {
        let d = self.rho.nrows();
        // K rho: apply K to every column.
        let mut left = self.rho.clone();
        for mut col in left.column_iter_mut() {
            apply_single(col.as_mut_slice(), qubit, k);
        }
        // K (K rho)^dagger = K rho K^dagger for Hermitian rho.
        let mut out = left.adjoint();
        for mut col in out.column_iter_mut() {
            apply_single(col.as_mut_slice(), qubit, k);
        }
        debug_assert_eq!(out.nrows(), d);
        out
    }

    pub(crate) fn set(&mut self, rho: DMatrix<Complex64>) {
        self.rho = rho;
    }
}

fn hermitian_part(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Square root of a PSD matrix. Eigenvalues within rounding of zero are
/// treated as zero; their square roots would otherwise inject O(1e-8) noise.
fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = hermitian_part(m).symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0_f64, |a, &l| a.max(l.abs()));
    let floor = 64.0 * f64::EPSILON * top.max(1.0) * m.nrows() as f64;
    let roots = eig
        .eigenvalues
        .map(|l| Complex64::new(if l > floor { l.sqrt() } else { 0.0 }, 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, evaluated as the
/// squared trace norm of sqrt(rho) sqrt(sigma).
pub fn fidelity_mixed(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.n_qubits != sigma.n_qubits {
        return Err(dim(format!(
            "fidelity of {}- and {}-qubit states",
            rho.n_qubits, sigma.n_qubits
        )));
    }
    rho.check()?;
    sigma.check()?;
    let product = psd_sqrt(&rho.rho) * psd_sqrt(&sigma.rho);
    let trace_norm: f64 = product.singular_values().iter().sum();
    Ok((trace_norm * trace_norm).clamp(0.0, 1.0))
}
