//! Statevector simulation of data-encoding circuits and fidelity estimation.

pub mod circuit;
pub mod fidelity;
pub mod gate;
pub mod noise;
pub mod state;

pub use circuit::{build_ansatz, encode, CircuitSpec, LayoutOp};
pub use fidelity::{fidelity_exact, fidelity_mixed, fidelity_shots, inversion_probability, DensityMatrix};
pub use gate::{Gate, GateKind};
pub use noise::{fidelity_noisy, noisy_final_state, NoiseModel};
pub use state::{apply_gate, StateVector};
