mod certify;
mod fig;
mod run;

pub use certify::{certify, report_lines};
pub use fig::{fig, Preset};
pub use run::run;

use tnt_core::dynamics::Simulator;
use tnt_core::metrology::{qfi_pure, squeezing_gain};
use tnt_core::spin::{SpinOperators, StateVector};
use tnt_core::Error;

use crate::config::Resolved;
use crate::error::CliResult;

fn simulator(cfg: &Resolved) -> CliResult<Simulator> {
    Ok(Simulator::new(SpinOperators::new(cfg.system())?, cfg.hamiltonian_spec())?)
}

/// Explicit generator from the config, else the QFI-optimal direction of the
/// prepared state.
fn generator_for(cfg: &Resolved, sim: &Simulator, prepared: &StateVector) -> CliResult<[f64; 3]> {
    match cfg.generator {
        Some(g) => Ok(g),
        None => Ok(qfi_pure(sim.ops(), prepared)?.optimal_dir),
    }
}

/// Squeezing gain, or NaN where the mean spin vanishes.
fn gain_or_nan(ops: &SpinOperators, psi: &StateVector) -> CliResult<f64> {
    match squeezing_gain(ops, psi) {
        Ok(s) => Ok(s.gain),
        Err(Error::VanishingMeanSpin) => Ok(f64::NAN),
        Err(e) => Err(e.into()),
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}
