//! Quantum fidelity kernels and classical baselines for binary screening
//! on handwriting features.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`] loads and validates the DARWIN table, standardizes, runs PCA
//!   and draws shuffle splits;
//! * [`sim`] simulates the data-encoding circuits (exact, shot-sampled and
//!   under thermal relaxation);
//! * [`kernels`] turns samples into Gram matrices and spectra;
//! * [`classifiers`] holds the SVM, kNN and decision tree;
//! * [`eval`] runs the grid-search protocol, the task ensembles and the
//!   noise study;
//! * [`synth`] generates stand-in data with the DARWIN column layout.

pub mod classifiers;
pub mod data;
pub mod error;
pub mod eval;
pub mod kernels;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};
