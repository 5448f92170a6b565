//! Statevector simulation of surface-code logical-qubit initialization with
//! SU(2)-conjugated stabilizers.
//!
//! The crate builds rotated surface codes whose stabilizer letters are
//! `S^A = U X U^dag` and `S^B = U Z U^dag` for a configurable single-qubit
//! unitary `U`, measures them with Hadamard-test circuits under a
//! circuit-level single-qubit noise model, and implements two initialization
//! protocols (post-selected chain injection and transversal injection)
//! together with their Pauli-scheme baselines. A Monte Carlo harness sweeps
//! error rates and emits deterministic CSV; a surgery module merges Pauli and
//! conjugated-basis patches through mixed seam stabilizers and composes a
//! logical CNOT.

pub mod algebra;
pub mod config;
pub mod densemat;
pub mod error;
pub mod lattice;
pub mod measurement;
pub mod noise;
pub mod protocols;
pub mod statevector;
pub mod surgery;
pub mod sweep;

pub use algebra::{build_basis, check_cross_qubit_commutation, solve_params_for_target, Su2Params};
pub use lattice::{build_layout, deterministic_tiles, logical_chains, validate_layout};
pub use statevector::{Gate2x2, RngStream, StateVector};
