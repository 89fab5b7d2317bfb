//! Twist-and-turn collective-spin dynamics with interaction-based readout.
//!
//! The crate evolves `N` two-level atoms on the symmetric subspace, encodes a
//! phase, applies a readout unitary and evaluates the classical and quantum
//! Fisher information of spin-resolved measurements under Gaussian detection
//! noise.

pub mod error;
pub mod dynamics;
pub mod metrology;
pub mod husimi;
pub mod optimizer;
pub mod spin;

pub use error::{Error, Result};

/// Crate version, recorded in output manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
