use num_complex::Complex64;

use super::gate::{Gate, Matrix2};
use crate::error::{dim, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 24;

/// Pure state of `n` qubits as 2^n complex amplitudes, little-endian.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// |0...0>
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(dim(format!("register width {n_qubits} outside 1..={MAX_QUBITS}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state |index>.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        if index >= s.amps.len() {
            return Err(dim(format!("basis index {index} out of range")));
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Wraps raw amplitudes; the length must be a power of two. No
    /// normalization is applied.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(dim(format!("{len} amplitudes is not a 2^n register")));
        }
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    /// <self|other>
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(dim(format!(
                "inner product of {}- and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Probability that `qubit` reads 1.
    pub fn prob_one(&self, qubit: usize) -> f64 {
        let mask = 1usize << qubit;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.amps.iter_mut().for_each(|a| *a *= factor);
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::Rx { qubit, .. } | Gate::Ry { qubit, .. } => {
                let m = gate.single_qubit_matrix().expect("rotation gate");
                apply_single(&mut self.amps, qubit, &m);
            }
            Gate::Cx { control, target } => apply_cx(&mut self.amps, control, target),
            Gate::Cz { a, b } => apply_cz(&mut self.amps, a, b),
        }
        Ok(())
    }
}

/// Applies `gate` to a copy of `state`.
pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

/// Applies a 2x2 operator (not necessarily unitary) to `qubit`.
pub(crate) fn apply_single(amps: &mut [Complex64], qubit: usize, m: &Matrix2) {
    let stride = 1usize << qubit;
    for block in amps.chunks_exact_mut(stride << 1) {
        let (lo, hi) = block.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a0, *a1);
            *a0 = m[0][0] * x + m[0][1] * y;
            *a1 = m[1][0] * x + m[1][1] * y;
        }
    }
}

fn apply_cx(amps: &mut [Complex64], control: usize, target: usize) {
    let (cm, tm) = (1usize << control, 1usize << target);
    for i in 0..amps.len() {
        if i & cm != 0 && i & tm == 0 {
            amps.swap(i, i | tm);
        }
    }
}

fn apply_cz(amps: &mut [Complex64], a: usize, b: usize) {
    let mask = (1usize << a) | (1usize << b);
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *amp = -*amp;
        }
    }
}

/// Pauli Z on one qubit.
pub(crate) fn apply_z(amps: &mut [Complex64], qubit: usize) {
    let mask = 1usize << qubit;
    for (i, amp) in amps.iter_mut().enumerate() {
        if i & mask != 0 {
            *amp = -*amp;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rx_zero_is_identity() {
        let s = StateVector::from_amplitudes(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let out = apply_gate(&s, &Gate::Rx { qubit: 0, angle: 0.0 }).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn rx_pi_flips_with_phase() {
        let s = StateVector::zero(1).unwrap();
        let out = apply_gate(&s, &Gate::Rx { qubit: 0, angle: PI }).unwrap();
        assert!((out.amplitudes()[0] - c(0.0, 0.0)).norm() < 1e-15);
        assert!((out.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn cz_on_basis_states() {
        for idx in 0..4 {
            let s = StateVector::basis(2, idx).unwrap();
            let out = apply_gate(&s, &Gate::Cz { a: 0, b: 1 }).unwrap();
            let expected = if idx == 3 { -1.0 } else { 1.0 };
            assert_eq!(out.amplitudes()[idx], c(expected, 0.0));
        }
    }

    #[test]
    fn cx_is_little_endian() {
        // control qubit 0 set (index 1) flips target qubit 1 -> index 3
        let s = StateVector::basis(2, 1).unwrap();
        let out = apply_gate(&s, &Gate::Cx { control: 0, target: 1 }).unwrap();
        assert_eq!(out.amplitudes()[3], c(1.0, 0.0));
        let s = StateVector::basis(2, 2).unwrap();
        let out = apply_gate(&s, &Gate::Cx { control: 0, target: 1 }).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn out_of_range_qubit() {
        let s = StateVector::zero(2).unwrap();
        assert!(apply_gate(&s, &Gate::Ry { qubit: 2, angle: 0.1 }).is_err());
        assert!(StateVector::zero(0).is_err());
        assert!(StateVector::from_amplitudes(vec![c(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn prob_one() {
        let s = apply_gate(&StateVector::zero(2).unwrap(), &Gate::Ry { qubit: 1, angle: PI / 2.0 }).unwrap();
        assert!((s.prob_one(1) - 0.5).abs() < 1e-15);
        assert!(s.prob_one(0).abs() < 1e-15);
    }
}
