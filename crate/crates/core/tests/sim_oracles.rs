use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qks_core::sim::gate::{cx_matrix, cz_matrix, rx, ry};
use qks_core::sim::*;

mod common;
use common::quantum::*;

#[test]
fn explicit_gate_matrices_are_unitary() {
    let mut mats: Vec<DMatrix<C>> = Vec::new();
    for k in 0..50 {
        let theta = -7.0 + 0.29 * k as f64;
        mats.push(m2(rx(theta)));
        mats.push(m2(ry(theta)));
    }
    mats.push(DMatrix::from_fn(4, 4, |i, j| cx_matrix()[i][j]));
    mats.push(DMatrix::from_fn(4, 4, |i, j| cz_matrix()[i][j]));
    for m in mats {
        let defect = (m.adjoint() * &m - DMatrix::identity(m.nrows(), m.nrows())).camax();
        assert!(defect <= 1e-12, "unitarity defect {defect:e}");
    }
}

#[test]
fn statevector_matches_dense_oracle_up_to_three_qubits() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 1..=3 {
        for _ in 0..30 {
            let mut state = random_state(&mut rng, n);
            let mut vec = DVector::from_column_slice(state.amplitudes());
            for _ in 0..25 {
                let g = random_gate(&mut rng, n);
                state = apply_gate(&state, &g).unwrap();
                vec = dense(n, &g) * vec;
                let d = max_diff(state.amplitudes(), vec.as_slice());
                assert!(d <= 1e-12, "n={n}, gate {g:?}: deviation {d:e}");
            }
        }
    }
}

#[test]
fn named_gate_actions() {
    let one_one = StateVector::basis(2, 3).unwrap();
    let out = apply_gate(&one_one, &Gate::Cz { a: 0, b: 1 }).unwrap();
    assert_eq!(out.amplitudes()[3], c(-1.0, 0.0));
    for i in 0..3 {
        let b = StateVector::basis(2, i).unwrap();
        assert_eq!(apply_gate(&b, &Gate::Cz { a: 1, b: 0 }).unwrap(), b);
    }
    let zero = StateVector::zero(1).unwrap();
    let flipped = apply_gate(
        &zero,
        &Gate::Rx {
            qubit: 0,
            angle: std::f64::consts::PI,
        },
    )
    .unwrap();
    assert!(max_diff(flipped.amplitudes(), &[c(0.0, 0.0), c(0.0, -1.0)]) < 1e-15);
    // little-endian: X on qubit 0 of |00> gives index 1
    let cx = apply_gate(
        &StateVector::basis(2, 1).unwrap(),
        &Gate::Cx { control: 0, target: 1 },
    )
    .unwrap();
    assert_eq!(cx.amplitudes()[3], c(1.0, 0.0));
    assert!(apply_gate(&zero, &Gate::Rx { qubit: 1, angle: 0.1 }).is_err());
}

#[test]
fn two_qubit_encoding_matches_hand_multiplied_matrices() {
    // n=2, P=4: RX layer, CZ(0,1), RY layer.
    let b = 0.4;
    let spec = build_ansatz(2, 4, b).unwrap();
    let x = [std::f64::consts::FRAC_PI_2 / b, 0.0, 0.3 / b, -1.1 / b];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // RX(pi/2) on qubit 0, RX(0) on qubit 1, written out as a 4x4 matrix.
    let rx_layer = DMatrix::from_row_slice(
        4,
        4,
        &[
            c(h, 0.0), c(0.0, -h), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, -h), c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0),
            c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0), c(0.0, -h),
            c(0.0, 0.0), c(0.0, 0.0), c(0.0, -h), c(h, 0.0),
        ],
    );
    let cz = DMatrix::from_diagonal(&DVector::from_vec(vec![
        c(1.0, 0.0),
        c(1.0, 0.0),
        c(1.0, 0.0),
        c(-1.0, 0.0),
    ]));
    let (s0, c0) = (0.15f64).sin_cos();
    let (s1, c1) = (-0.55f64).sin_cos();
    // RY(0.3) on qubit 0 and RY(-1.1) on qubit 1: kron(RY1, RY0) by hand.
    let ry_layer = DMatrix::from_row_slice(
        4,
        4,
        &[
            c(c1 * c0, 0.0), c(-c1 * s0, 0.0), c(-s1 * c0, 0.0), c(s1 * s0, 0.0),
            c(c1 * s0, 0.0), c(c1 * c0, 0.0), c(-s1 * s0, 0.0), c(-s1 * c0, 0.0),
            c(s1 * c0, 0.0), c(-s1 * s0, 0.0), c(c1 * c0, 0.0), c(-c1 * s0, 0.0),
            c(s1 * s0, 0.0), c(s1 * c0, 0.0), c(c1 * s0, 0.0), c(c1 * c0, 0.0),
        ],
    );
    let mut e0 = DVector::zeros(4);
    e0[0] = c(1.0, 0.0);
    let expected = ry_layer * cz * rx_layer * e0;
    let got = encode(&spec, &x).unwrap();
    assert!(max_diff(got.amplitudes(), expected.as_slice()) < 1e-12);
}

#[test]
fn encoding_preserves_norm_over_1000_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let specs: Vec<CircuitSpec> = [(6, 24), (8, 24), (12, 24), (9, 18), (3, 9)]
        .iter()
        .map(|&(n, p)| build_ansatz(n, p, rng.random_range(0.1..1.5)).unwrap())
        .collect();
    for t in 0..1000 {
        let spec = &specs[t % specs.len()];
        let x = random_x(&mut rng, spec.n_params);
        let norm = encode(spec, &x).unwrap().norm_sqr();
        assert!((norm - 1.0).abs() <= 1e-10, "trial {t}: norm {norm}");
    }
}

#[test]
fn zero_input_encodes_to_ground_state() {
    let spec = build_ansatz(6, 24, 0.4).unwrap();
    let s = encode(&spec, &[0.0; 24]).unwrap();
    assert_eq!(s, StateVector::zero(6).unwrap());
}

#[test]
fn inversion_probability_equals_exact_fidelity() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..=6 {
        let spec = build_ansatz(n, 4 * n, 0.7).unwrap();
        for _ in 0..100 {
            let x = random_x(&mut rng, spec.n_params);
            let y = random_x(&mut rng, spec.n_params);
            let exact = fidelity_exact(&encode(&spec, &x).unwrap(), &encode(&spec, &y).unwrap()).unwrap();
            let inv = inversion_probability(&spec, &x, &y).unwrap();
            assert!((exact - inv).abs() <= 1e-10, "n={n}: {exact} vs {inv}");
        }
    }
}

#[test]
fn exact_fidelity_matches_inner_product_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 1..=5 {
        let a = random_state(&mut rng, n);
        let b = random_state(&mut rng, n);
        let ip: C = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum();
        let f = fidelity_exact(&a, &b).unwrap();
        assert!((f - ip.norm_sqr()).abs() < 1e-14);
        assert!((f - fidelity_exact(&b, &a).unwrap()).abs() < 1e-15);
    }
    let zero = StateVector::basis(1, 0).unwrap();
    let one = StateVector::basis(1, 1).unwrap();
    assert_eq!(fidelity_exact(&zero, &one).unwrap(), 0.0);
    assert!(fidelity_exact(&zero, &StateVector::zero(2).unwrap()).is_err());
}

#[test]
fn mixed_fidelity_agrees_with_pure_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=4 {
        for _ in 0..10 {
            let a = random_state(&mut rng, n);
            let b = random_state(&mut rng, n);
            let pure = fidelity_exact(&a, &b).unwrap();
            let mixed =
                fidelity_mixed(&DensityMatrix::pure(&a).unwrap(), &DensityMatrix::pure(&b).unwrap()).unwrap();
            assert!((pure - mixed).abs() <= 1e-8, "{pure} vs {mixed}");
        }
    }
}

#[test]
fn mixed_fidelity_closed_forms() {
    let zero = DensityMatrix::pure(&StateVector::basis(1, 0).unwrap()).unwrap();
    let one = DensityMatrix::pure(&StateVector::basis(1, 1).unwrap()).unwrap();
    let mixed = DensityMatrix::maximally_mixed(1).unwrap();
    assert!((fidelity_mixed(&mixed, &zero).unwrap() - 0.5).abs() < 1e-10);
    assert!(fidelity_mixed(&zero, &one).unwrap().abs() < 1e-10);
    assert!((fidelity_mixed(&mixed, &mixed).unwrap() - 1.0).abs() < 1e-10);
    let bad = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
    assert!(DensityMatrix::from_matrix(bad).is_err());
}

fn binomial_band(p: f64, shots: u64) -> f64 {
    3.0 * (p * (1.0 - p) / shots as f64).sqrt()
}

#[test]
fn shot_estimates_concentrate_at_256_shots() {
    let spec = build_ansatz(6, 24, 0.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // a pair away from the edges, where the binomial band is widest
    let (x, y, p) = loop {
        let x = random_x(&mut rng, 24);
        let y = random_x(&mut rng, 24);
        let p = inversion_probability(&spec, &x, &y).unwrap();
        if (0.2..0.8).contains(&p) {
            break (x, y, p);
        }
    };
    let band = binomial_band(p, 256);
    let inside = (0..1000u64)
        .filter(|&seed| (fidelity_shots(&spec, &x, &y, 256, seed).unwrap() - p).abs() <= band)
        .count();
    assert!(inside >= 990, "{inside}/1000 within 3 sigma");
}

#[test]
fn shot_estimate_converges_at_a_million_shots() {
    let spec = build_ansatz(8, 24, 0.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = random_x(&mut rng, 24);
    let y = random_x(&mut rng, 24);
    let exact = fidelity_exact(&encode(&spec, &x).unwrap(), &encode(&spec, &y).unwrap()).unwrap();
    let est = fidelity_shots(&spec, &x, &y, 1_000_000, 11).unwrap();
    assert!((est - exact).abs() <= 5e-3);
}

#[test]
fn identical_inputs_give_unit_shot_estimate() {
    let spec = build_ansatz(6, 24, 0.4).unwrap();
    let x: Vec<f64> = (0..24).map(|i| i as f64 * 0.1).collect();
    for seed in 0..20 {
        assert_eq!(fidelity_shots(&spec, &x, &x, 256, seed).unwrap(), 1.0);
    }
}

#[test]
fn noiseless_trajectories_reduce_to_shot_sampling() {
    let spec = build_ansatz(6, 24, 0.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for seed in 0..10 {
        let x = random_x(&mut rng, 24);
        let y = random_x(&mut rng, 24);
        let shots = fidelity_shots(&spec, &x, &y, 256, seed).unwrap();
        let noisy = fidelity_noisy(&spec, &x, &y, &NoiseModel::noiseless(256, seed)).unwrap();
        assert_eq!(shots, noisy);
    }
}

#[test]
fn strong_noise_lowers_return_probability() {
    let spec = build_ansatz(4, 8, 0.4).unwrap();
    let x = [0.3; 8];
    let noise = NoiseModel {
        t1_us: 0.3,
        t2_us: 0.3,
        ..NoiseModel::melbourne(3)
    };
    assert!(fidelity_noisy(&spec, &x, &x, &noise).unwrap() < 1.0);
}

#[test]
fn trajectory_average_matches_density_evolution() {
    let spec = build_ansatz(3, 6, 0.8).unwrap();
    let noise = NoiseModel {
        t1_us: 2.0,
        t2_us: 3.0,
        shots: 200_000,
        ..NoiseModel::melbourne(9)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..3 {
        let x = random_x(&mut rng, 6);
        let y = random_x(&mut rng, 6);
        let rho = noisy_final_state(&spec, &x, &y, &noise).unwrap();
        rho.check().unwrap();
        let p = rho.population(0);
        let est = fidelity_noisy(&spec, &x, &y, &noise).unwrap();
        let sigma = (p * (1.0 - p) / noise.shots as f64).sqrt();
        assert!((est - p).abs() <= 5.0 * sigma + 1e-12, "trajectory {est} vs density {p}");
        let clean = inversion_probability(&spec, &x, &y).unwrap();
        assert!((p - clean).abs() > 1e-6, "noise should change the outcome");
    }
}

#[test]
fn noise_model_invariants() {
    assert!(NoiseModel::melbourne(0).validate().is_ok());
    let bad_t2 = NoiseModel {
        t2_us: 101.0,
        ..NoiseModel::melbourne(0)
    };
    assert!(bad_t2.validate().is_err());
    let no_shots = NoiseModel {
        shots: 0,
        ..NoiseModel::melbourne(0)
    };
    assert!(no_shots.validate().is_err());
}

#[test]
fn circuit_json_round_trip() {
    let spec = build_ansatz(12, 24, 0.4).unwrap();
    let back = CircuitSpec::from_json(&spec.to_json().unwrap()).unwrap();
    assert_eq!(spec, back);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fidelity_ignores_global_phase(seed in any::<u64>(), phase in -6.0f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(&mut rng, 3);
        let b = random_state(&mut rng, 3);
        let rot = C::from_polar(1.0, phase);
        let b_rot = StateVector::from_amplitudes(b.amplitudes().iter().map(|z| z * rot).collect()).unwrap();
        let f = fidelity_exact(&a, &b).unwrap();
        prop_assert!((f - fidelity_exact(&a, &b_rot).unwrap()).abs() < 1e-12);
        prop_assert!((f - fidelity_exact(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn encoding_keeps_unit_norm(
        x in prop::collection::vec(-10.0f64..10.0, 24),
        bandwidth in 0.01f64..2.0,
        qubits in prop::sample::select(vec![1usize, 2, 3, 4, 6, 8, 12]),
    ) {
        let spec = build_ansatz(qubits, 24, bandwidth).unwrap();
        let norm = encode(&spec, &x).unwrap().norm_sqr();
        prop_assert!((norm - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn shot_estimates_are_seeded(seed in any::<u64>()) {
        let spec = build_ansatz(4, 8, 0.5).unwrap();
        let x = [0.1, -0.4, 1.2, 0.0, 0.9, -2.0, 0.3, 0.5];
        let y = [0.2, 0.4, -1.2, 0.7, 0.1, 1.0, -0.3, 0.0];
        let a = fidelity_shots(&spec, &x, &y, 256, seed).unwrap();
        let b = fidelity_shots(&spec, &x, &y, 256, seed).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert_eq!((a * 256.0).fract(), 0.0);
    }
}
