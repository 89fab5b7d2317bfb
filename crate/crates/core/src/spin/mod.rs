//! Collective spin of `N` two-level atoms on the symmetric (Dicke) subspace.
//!
//! Every vector and matrix in this crate is expressed in the `S_z` eigenbasis
//! with rows ordered by descending eigenvalue, `m = s, s-1, ..., -s`. Index `k`
//! runs `0..=N` and corresponds to `m = s - k`.

mod basis;
mod operator;
mod ops;
mod parity;
mod rotation;
mod state;

pub use basis::BasisSpec;
pub use operator::{eigenbasis, min_eigenstate, Eigenbasis, Operator, OperatorKind};
pub(crate) use operator::{max_abs, spectral_decomposition};
pub use ops::{build_spin_operators, SpinOperators};
pub use parity::{check_parity_conditions, parity_operator, ConditionCheck, ParityReport};
pub use rotation::{EulerZyz, Rotator};
pub use state::{coherent_direction, coherent_state, StateVector};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when validating unit vectors handed in by callers.
pub const UNIT_TOLERANCE: f64 = 1e-10;

/// Atom number and the derived spin quantum numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinSystem {
    n_atoms: usize,
}

impl SpinSystem {
    pub fn new(n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::ZeroAtoms);
        }
        Ok(Self { n_atoms })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Total spin `s = N/2`.
    pub fn spin(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// Hilbert-space dimension `N + 1`.
    pub fn dim(&self) -> usize {
        self.n_atoms + 1
    }

    /// `S_z` eigenvalue carried by basis index `k`.
    pub fn m_value(&self, k: usize) -> f64 {
        self.spin() - k as f64
    }

    /// Outcome labels in storage order, `s, s-1, ..., -s`.
    pub fn m_values(&self) -> Vec<f64> {
        (0..self.dim()).map(|k| self.m_value(k)).collect()
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found });
        }
        Ok(())
    }
}

/// Validates that `v` has unit length and returns it unchanged.
pub fn unit_vector(v: [f64; 3]) -> Result<[f64; 3]> {
    let norm = norm3(v);
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::NonUnitVector { norm });
    }
    Ok(v)
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

pub(crate) fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
