//! Parity certification of a protocol: checks the sufficient conditions for
//! the readout to saturate the quantum Cramer-Rao bound.

use tnt_core::spin::{check_parity_conditions, ParityReport};

use super::{generator_for, simulator};
use crate::config::Resolved;
use crate::error::CliResult;

pub fn certify(cfg: &Resolved) -> CliResult<ParityReport> {
    let sim = simulator(cfg)?;
    let psi0 = sim.initial_state()?;
    let prepared = sim.prepare(&psi0, cfg.t1)?;
    let generator = generator_for(cfg, &sim, &prepared)?;
    let spec = cfg.protocol(generator)?;
    let sn = sim.ops().spin_direction(generator)?;
    let u2 = sim.readout_operator(&spec.readout, spec.t1)?;
    Ok(check_parity_conditions(sim.ops(), &prepared, &sn, &u2, &spec.measurement)?)
}

pub fn report_lines(r: &ParityReport) -> Vec<String> {
    let mark = |h: bool| if h { "PASS" } else { "FAIL" };
    vec![
        format!(
            "{} state parity eigenstate (parity {}): residual {:.3e}",
            mark(r.state_parity.holds),
            if r.parity == 0 { "even" } else { "odd" },
            r.state_parity.residual
        ),
        format!("{} generator anticommutes with parity: residual {:.3e}", mark(r.generator_flip.holds), r.generator_flip.residual),
        format!("{} readout commutes with parity: residual {:.3e}", mark(r.readout_commutes.holds), r.readout_commutes.residual),
    ]
}
