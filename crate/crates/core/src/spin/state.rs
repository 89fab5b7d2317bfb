use nalgebra::DVector;
use num_complex::Complex64 as C64;

use super::{EulerZyz, SpinOperators, SpinSystem};
use crate::error::{Error, Result};

/// Normalization tolerance enforced at construction.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Normalized pure state, amplitudes indexed by descending `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    system: SpinSystem,
    amplitudes: DVector<C64>,
}

impl StateVector {
    pub fn new(system: SpinSystem, amplitudes: DVector<C64>) -> Result<Self> {
        system.check_dim(amplitudes.len())?;
        let norm_sqr = amplitudes.norm_squared();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { system, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn from_unnormalized(system: SpinSystem, amplitudes: DVector<C64>) -> Result<Self> {
        system.check_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized { norm_sqr: norm * norm });
        }
        Ok(Self { system, amplitudes: amplitudes.unscale(norm) })
    }

    /// Dicke state with index `k`, i.e. `m = s - k`.
    pub fn basis_state(system: SpinSystem, k: usize) -> Result<Self> {
        if k >= system.dim() {
            return Err(Error::InvalidParameter(format!(
                "basis index {k} outside 0..={}",
                system.n_atoms()
            )));
        }
        let mut v = DVector::<C64>::zeros(system.dim());
        v[k] = C64::new(1.0, 0.0);
        Ok(Self { system, amplitudes: v })
    }

    pub fn system(&self) -> SpinSystem {
        self.system
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Multiplies every amplitude by `exp(i theta)`.
    pub fn with_global_phase(&self, theta: f64) -> StateVector {
        Self {
            system: self.system,
            amplitudes: &self.amplitudes * C64::from_polar(1.0, theta),
        }
    }

    /// `D(R)|self>`.
    pub fn rotated(&self, ops: &SpinOperators, r: &EulerZyz) -> Result<StateVector> {
        Self::from_unnormalized(self.system, ops.rotator().apply(r, &self.amplitudes))
    }
}

/// `|theta, varphi> = exp(i varphi S_z) exp(i theta S_y) |m = s>`, exactly as written,
/// so `(pi/2, 0)` lands on the `S_x = -N/2` state.
pub fn coherent_state(ops: &SpinOperators, theta: f64, varphi: f64) -> StateVector {
    let system = ops.system();
    let mut top = DVector::<C64>::zeros(system.dim());
    top[0] = C64::new(1.0, 0.0);
    let amps = ops.rotator().apply(&EulerZyz::new(-varphi, -theta, 0.0), &top);
    // unitary image of a unit vector; renormalize only to trim rounding
    let norm = amps.norm();
    StateVector { system, amplitudes: amps.unscale(norm) }
}

/// Direction of the mean spin of `coherent_state(theta, varphi)`.
pub fn coherent_direction(theta: f64, varphi: f64) -> [f64; 3] {
    [-theta.sin() * varphi.cos(), theta.sin() * varphi.sin(), theta.cos()]
}
