use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use qks_core::sim::gate::{rx, ry};
use qks_core::sim::{Gate, StateVector};

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn m2(rows: [[C; 2]; 2]) -> DMatrix<C> {
    DMatrix::from_fn(2, 2, |i, j| rows[i][j])
}

pub fn kron_chain(factors: &[DMatrix<C>]) -> DMatrix<C> {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

/// Embeds per-qubit 2x2 factors; qubit n-1 is the leftmost Kronecker factor.
pub fn embed(n: usize, ops: &[(usize, DMatrix<C>)]) -> DMatrix<C> {
    let factors: Vec<DMatrix<C>> = (0..n)
        .rev()
        .map(|q| {
            ops.iter()
                .find(|(k, _)| *k == q)
                .map(|(_, m)| m.clone())
                .unwrap_or_else(|| DMatrix::identity(2, 2))
        })
        .collect();
    kron_chain(&factors)
}

pub fn dense(n: usize, g: &Gate) -> DMatrix<C> {
    let p0 = m2([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]);
    let p1 = m2([[c(0.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]);
    let x = m2([[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]);
    let z = m2([[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]);
    match *g {
        Gate::Rx { qubit, angle } => embed(n, &[(qubit, m2(rx(angle)))]),
        Gate::Ry { qubit, angle } => embed(n, &[(qubit, m2(ry(angle)))]),
        Gate::Cx { control, target } => {
            embed(n, &[(control, p0)]) + embed(n, &[(control, p1), (target, x)])
        }
        Gate::Cz { a, b } => embed(n, &[(a, p0)]) + embed(n, &[(a, p1), (b, z)]),
    }
}

pub fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> Gate {
    let angle: f64 = rng.random_range(-4.0..4.0);
    let q = rng.random_range(0..n);
    let kind = if n == 1 { rng.random_range(0..2) } else { rng.random_range(0..4) };
    let other = if n == 1 { q } else { (q + rng.random_range(1..n)) % n };
    match kind {
        0 => Gate::Rx { qubit: q, angle },
        1 => Gate::Ry { qubit: q, angle },
        2 => Gate::Cx {
            control: q,
            target: other,
        },
        _ => Gate::Cz { a: q, b: other },
    }
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector {
    let mut amps: Vec<C> = (0..1 << n)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(amps).unwrap()
}

pub fn random_x(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-3.0..3.0)).collect()
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
