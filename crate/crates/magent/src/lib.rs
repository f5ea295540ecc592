//! Numerics for the joint statistics of linear entanglement entropy and
//! linear stabilizer entropy of random bipartite pure states.
//!
//! The crate is organized around six pieces:
//!
//! * [`pauli`] — bit-level Pauli-string algebra and the stabilizer-entropy
//!   kernels (stabilizer purity, `M_lin`, `M_2`) plus exact trace-pattern sums.
//! * [`state`] — pure-state construction and sampling: Haar states and
//!   unitaries, Schmidt decomposition, Schmidt-orbit sampling, linear
//!   entanglement and anti-flatness.
//! * [`closed`] — every analytic formula as an exactly evaluable function
//!   (big-rational arithmetic, floats only at the boundary).
//! * [`mc`] — parallel, bit-reproducible Monte Carlo estimation of moments,
//!   covariances, orbit averages, conditional curves and joint histograms.
//! * [`perm`] / [`weingarten`] / [`sums`] — exact symmetric-group machinery:
//!   conjugacy classes, permutation-operator traces, Weingarten tables, and
//!   the exact variance/covariance permutation sums.
//! * [`clifford`] — exhaustive Clifford enumeration for one and two qubits
//!   and the Clifford-averaged anti-flatness identity.

pub mod clifford;
pub mod closed;
pub mod mc;
pub mod pauli;
pub mod perm;
pub mod state;
pub mod sums;
pub mod weingarten;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state is not normalized: |norm - 1| = {0:.3e} exceeds 1e-10")]
    NotNormalized(f64),
    #[error("qubit count {n} exceeds the cap {cap}; raise the cap explicitly to override")]
    QubitCapExceeded { n: u32, cap: u32 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("feasibility budget exceeded: {0}")]
    Budget(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
