//! Classical simulation of out-of-time-ordered correlators in full and
//! sparsified bosonic SYK models.
//!
//! The crate is layered bottom-up:
//!
//! - [`pauli`]: symplectic Pauli-string algebra.
//! - [`hamiltonian`]: seeded SYK Hamiltonians as weighted Pauli sums.
//! - [`circuit`]: gate IR, Pauli-exponential synthesis, Trotter steps and the
//!   interferometric OTOC circuit.
//! - [`transpile`]: SWAP routing on coupling graphs and two-qubit depth.
//! - [`simulate`]: statevector engine, exact evolution, shots and noise.
//! - [`otoc`]: the correlator itself, computed directly or via the circuit.
//! - [`ensemble`]: seeded ensembles, depth surveys and CSV output.

pub mod circuit;
pub mod ensemble;
pub mod error;
mod frame;
pub mod hamiltonian;
pub mod otoc;
pub mod pauli;
pub mod rng;
pub mod simulate;
pub mod stats;
pub mod transpile;

pub use error::{Error, Result};
