//! Measurement-basis search in two planes, and the noise, echo-time and
//! time-budget sweeps built on it.

mod basis;
mod sweep;

pub use basis::{optimize_basis, BasisOptimum, BasisSearchSpec, PlaneOptimum, SearchPlane};
pub use sweep::{
    budget_sweep, echo_time_sweep, noise_sweep, snl_crossing, AsymmetricEchoMode, BasisMode,
    BudgetSweepSpec, EchoSweepSpec, NoiseSweepSpec, Series, SweepMeta, SweepResult, SweepSettings,
};
