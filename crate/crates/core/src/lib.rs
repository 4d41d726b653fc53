//! Quantum-chemistry ansatz construction and simulation toolkit.

pub mod compass;
pub mod error;
pub mod fcidump;
pub mod fermion_ops;
pub mod noise;
pub mod optimizer;
pub mod oracle;
pub mod pauli_jw;
pub mod simulator;
pub mod vqe;

pub use error::{Error, Result};
