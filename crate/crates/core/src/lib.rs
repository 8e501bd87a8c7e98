//! Near-field wideband channel estimation for XL-RIS assisted OFDM links.
//!
//! The crate synthesizes cascaded BS-RIS-UE channels where the BS-RIS hop is
//! far field and the RIS-UE hop is near field, builds a frequency-independent
//! modified-DFT dictionary under which the stacked channel is block sparse
//! along both the coefficient and the subcarrier axis, and recovers the channel
//! from compressed pilot observations with greedy and Bayesian solvers.
//!
//! Conventions used everywhere:
//!
//! * RIS element `(n_y, n_z)` lives at flat index `n_y * N_z + n_z`.
//! * Matrices are vectorized column-major, so `vec(H_p)[t * N + i] = H_p[i, t]`.
//! * Subcarriers are numbered `1..=P` in [`config::subcarrier_frequency`] and
//!   zero-based everywhere else.

pub mod bench;
pub mod channel;
pub mod config;
pub mod container;
pub mod dictionary;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod solvers;
pub mod validate;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub use faer::c64;
