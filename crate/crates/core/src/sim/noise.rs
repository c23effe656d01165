//! Thermal-relaxation noise and trajectory sampling of the inversion test.
//!
//! After every gate each qubit the gate touched goes through amplitude
//! damping (`gamma = 1 - exp(-t/T1)`) followed by pure dephasing. A
//! dephasing event happens with probability `1 - exp(-t/T_phi)` and fully
//! randomizes the phase, i.e. applies Z with probability one half, so that
//! coherences decay as `exp(-t/T2)` overall, with `1/T_phi = 1/T2 - 1/(2 T1)`.
//!
//! Trajectories are sampled shot-grouped: shots sharing an identical noise
//! history share one state vector, and at each noise location the group is
//! split with a binomial draw. This is equal in distribution to simulating
//! one independent trajectory per shot.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::circuit::CircuitSpec;
use super::fidelity::{sample_count, DensityMatrix, MAX_DENSITY_QUBITS};
use super::gate::{Gate, Matrix2};
use super::state::{apply_z, StateVector};
use crate::error::{dim, invalid, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Device timing parameters. T1/T2 in microseconds, gate times in
/// nanoseconds. Infinite T1 and T2 give a noiseless shot simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub t1_us: f64,
    pub t2_us: f64,
    pub gate_time_1q_ns: f64,
    pub gate_time_2q_ns: f64,
    pub shots: u64,
    pub seed: u64,
}

impl NoiseModel {
    /// Average T1 = 50 us and T2 = 70 us, 256 shots.
    pub fn melbourne(seed: u64) -> Self {
        Self {
            t1_us: 50.0,
            t2_us: 70.0,
            gate_time_1q_ns: 50.0,
            gate_time_2q_ns: 300.0,
            shots: 256,
            seed,
        }
    }

    pub fn noiseless(shots: u64, seed: u64) -> Self {
        Self {
            t1_us: f64::INFINITY,
            t2_us: f64::INFINITY,
            gate_time_1q_ns: 50.0,
            gate_time_2q_ns: 300.0,
            shots,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && !v.is_nan();
        if !positive(self.t1_us) || !positive(self.t2_us) {
            return Err(invalid(format!(
                "T1 and T2 must be positive (T1={}, T2={})",
                self.t1_us, self.t2_us
            )));
        }
        if !(positive(self.gate_time_1q_ns) && self.gate_time_1q_ns.is_finite())
            || !(positive(self.gate_time_2q_ns) && self.gate_time_2q_ns.is_finite())
        {
            return Err(invalid("gate times must be positive and finite"));
        }
        if self.t2_us > 2.0 * self.t1_us {
            return Err(invalid(format!(
                "T2={} exceeds 2*T1={}",
                self.t2_us,
                2.0 * self.t1_us
            )));
        }
        if self.shots == 0 {
            return Err(invalid("shots must be at least 1"));
        }
        Ok(())
    }

    /// (amplitude damping probability, dephasing-event probability) for a
    /// gate acting on `arity` qubits.
    pub fn channel_probabilities(&self, arity: usize) -> (f64, f64) {
        let t_us = if arity == 1 {
            self.gate_time_1q_ns
        } else {
            self.gate_time_2q_ns
        } / 1000.0;
        let gamma = -(-t_us / self.t1_us).exp_m1();
        let phi_rate = (1.0 / self.t2_us - 0.5 / self.t1_us).max(0.0);
        let dephase = -(-t_us * phi_rate).exp_m1();
        (gamma, dephase)
    }
}

/// Kraus operators of amplitude damping: (no-jump, jump).
fn damping_kraus(gamma: f64) -> (Matrix2, Matrix2) {
    let one = Complex64::new(1.0, 0.0);
    let k0 = [[one, ZERO], [ZERO, Complex64::new((1.0 - gamma).sqrt(), 0.0)]];
    let k1 = [[ZERO, Complex64::new(gamma.sqrt(), 0.0)], [ZERO, ZERO]];
    (k0, k1)
}

/// Shots sharing one noise history. The state is left unnormalized after
/// no-jump steps; `norm_sqr` tracks its squared norm.
struct Branch {
    state: StateVector,
    norm_sqr: f64,
    shots: u64,
}

/// Squared norm of the amplitudes with `qubit` set.
fn mass_one(amps: &[Complex64], qubit: usize) -> f64 {
    let stride = 1usize << qubit;
    amps.chunks_exact(stride << 1)
        .map(|block| block[stride..].iter().map(Complex64::norm_sqr).sum::<f64>())
        .sum()
}

/// Inversion test under thermal relaxation; returns the fraction of shots
/// reading all zeros.
pub fn fidelity_noisy(spec: &CircuitSpec, x: &[f64], y: &[f64], noise: &NoiseModel) -> Result<f64> {
    noise.validate()?;
    let gates = spec.inversion_test(x, y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut branches = vec![Branch {
        state: StateVector::zero(spec.n_qubits)?,
        norm_sqr: 1.0,
        shots: noise.shots,
    }];

    for gate in &gates {
        for b in &mut branches {
            b.state.apply(gate)?;
        }
        let qubits = gate.qubits();
        let (gamma, dephase) = noise.channel_probabilities(qubits.len());
        for &q in &qubits {
            if gamma > 0.0 {
                amplitude_damping_step(&mut branches, q, gamma, &mut rng);
            }
            if dephase > 0.0 {
                dephasing_step(&mut branches, q, 0.5 * dephase, &mut rng);
            }
        }
    }

    let hits: u64 = branches
        .iter()
        .map(|b| sample_count(&mut rng, b.shots, b.state.amplitudes()[0].norm_sqr() / b.norm_sqr))
        .sum();
    Ok(hits as f64 / noise.shots as f64)
}

fn amplitude_damping_step(branches: &mut Vec<Branch>, qubit: usize, gamma: f64, rng: &mut ChaCha8Rng) {
    let stride = 1usize << qubit;
    let keep = (1.0 - gamma).sqrt();
    let mut jumped = Vec::new();
    for b in branches.iter_mut() {
        let m1 = mass_one(b.state.amplitudes(), qubit);
        let jumps = sample_count(rng, b.shots, gamma * m1 / b.norm_sqr);
        if jumps > 0 {
            // sigma_minus |psi>, squared norm m1
            let mut amps = vec![ZERO; b.state.amplitudes().len()];
            for (dst, src) in amps.chunks_exact_mut(stride << 1).zip(b.state.amplitudes().chunks_exact(stride << 1)) {
                dst[..stride].copy_from_slice(&src[stride..]);
            }
            let state = StateVector::from_amplitudes(amps).expect("same register size");
            jumped.push(Branch {
                state,
                norm_sqr: m1,
                shots: jumps,
            });
        }
        b.shots -= jumps;
        if b.shots == 0 {
            continue;
        }
        // K0 |psi>
        for block in b.state.amplitudes_mut().chunks_exact_mut(stride << 1) {
            block[stride..].iter_mut().for_each(|a| *a *= keep);
        }
        b.norm_sqr = (b.norm_sqr - m1) + (1.0 - gamma) * m1;
    }
    branches.retain(|b| b.shots > 0);
    branches.extend(jumped);
}

fn dephasing_step(branches: &mut Vec<Branch>, qubit: usize, flip_prob: f64, rng: &mut ChaCha8Rng) {
    let mut flipped = Vec::new();
    for b in branches.iter_mut() {
        let flips = sample_count(rng, b.shots, flip_prob);
        if flips == b.shots {
            apply_z(b.state.amplitudes_mut(), qubit);
        } else if flips > 0 {
            let mut state = b.state.clone();
            apply_z(state.amplitudes_mut(), qubit);
            flipped.push(Branch {
                state,
                norm_sqr: b.norm_sqr,
                shots: flips,
            });
            b.shots -= flips;
        }
    }
    branches.extend(flipped);
}

/// Exact density-matrix evolution of the same noisy inversion test; small
/// registers only. Used to validate the trajectory sampler.
pub fn noisy_final_state(spec: &CircuitSpec, x: &[f64], y: &[f64], noise: &NoiseModel) -> Result<DensityMatrix> {
    noise.validate()?;
    if spec.n_qubits > MAX_DENSITY_QUBITS {
        return Err(dim(format!(
            "density evolution is limited to {MAX_DENSITY_QUBITS} qubits"
        )));
    }
    let gates = spec.inversion_test(x, y)?;
    let mut rho = DensityMatrix::pure(&StateVector::zero(spec.n_qubits)?)?;
    let z = [[Complex64::new(1.0, 0.0), ZERO], [ZERO, Complex64::new(-1.0, 0.0)]];
    for gate in &gates {
        apply_unitary_to_density(&mut rho, gate)?;
        let qubits = gate.qubits();
        let (gamma, dephase) = noise.channel_probabilities(qubits.len());
        for &q in &qubits {
            let (k0, k1) = damping_kraus(gamma);
            let damped = rho.conjugate_single(q, &k0) + rho.conjugate_single(q, &k1);
            rho.set(damped);
            let flip = Complex64::new(0.5 * dephase, 0.0);
            let dephased = rho.matrix() * (Complex64::new(1.0, 0.0) - flip) + rho.conjugate_single(q, &z) * flip;
            rho.set(dephased);
        }
    }
    Ok(rho)
}

fn apply_unitary_to_density(rho: &mut DensityMatrix, gate: &Gate) -> Result<()> {
    let mut left: DMatrix<Complex64> = rho.matrix().clone();
    for mut col in left.column_iter_mut() {
        let mut s = StateVector::from_amplitudes(col.as_slice().to_vec())?;
        s.apply(gate)?;
        col.copy_from_slice(s.amplitudes());
    }
    let mut out = left.adjoint();
    for mut col in out.column_iter_mut() {
        let mut s = StateVector::from_amplitudes(col.as_slice().to_vec())?;
        s.apply(gate)?;
        col.copy_from_slice(s.amplitudes());
    }
    rho.set(out);
    Ok(())
}
