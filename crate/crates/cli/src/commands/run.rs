//! Single protocol evaluation from a configuration file.

use serde_json::json;
use tnt_core::husimi::{husimi_q, QGridSpec};
use tnt_core::metrology::{cfi, outcome_distribution, qfi_pure, spin_covariance, FisherMethod, NoiseModel};
use tnt_core::optimizer::{optimize_basis, BasisMode};

use super::{fmt_num, gain_or_nan, generator_for, simulator};
use crate::config::Resolved;
use crate::error::CliResult;
use crate::output::{Bundle, Table};

pub fn run(cfg: &Resolved) -> CliResult<Bundle> {
    let sim = simulator(cfg)?;
    let psi0 = sim.initial_state()?;
    let prepared = sim.prepare(&psi0, cfg.t1)?;
    let qfi = qfi_pure(sim.ops(), &prepared)?;
    let generator = generator_for(cfg, &sim, &prepared)?;
    let spec = cfg.protocol(generator)?;
    let (mean, _) = spin_covariance(sim.ops(), &prepared)?;

    let mut bundle = Bundle::new(cfg);
    let mut per_sigma = Vec::new();
    let mut probs = Table::new().with("m", sim.system().m_values());
    for &sigma in &cfg.sigmas {
        let noise = NoiseModel::new(sigma)?;
        let analytic = cfi(&sim, &spec, &psi0, noise, cfg.phi_eval, FisherMethod::Analytic)?;
        let fd = cfi(&sim, &spec, &psi0, noise, cfg.phi_eval, FisherMethod::FiniteDifference)?;
        let optimized = match cfg.basis {
            BasisMode::FixedSx => None,
            BasisMode::Optimized => Some(optimize_basis(&sim, &spec, &psi0, noise, &cfg.search)?),
        };
        per_sigma.push(json!({
            "sigma": sigma,
            "fc_analytic": analytic.value,
            "fc_fd": fd.value,
            "dropped_bound": analytic.dropped_bound,
            "optimized": optimized,
        }));
        let p = outcome_distribution(&sim, &spec, &psi0, noise, cfg.phi)?;
        probs = probs.with(format!("p_sigma_{}", fmt_num(sigma)), p.probs().to_vec());
    }
    let squeezing = tnt_core::metrology::squeezing_gain(sim.ops(), &prepared).ok();
    bundle.summary(
        "run",
        json!({
            "n_atoms": cfg.n_atoms,
            "t1": cfg.t1,
            "readout": spec.readout.label(),
            "phi_eval": cfg.phi_eval,
            "generator": generator,
            "qfi": qfi.value,
            "optimal_dir": qfi.optimal_dir,
            "mean_spin": mean,
            "xi2": squeezing.map(|s| s.xi2),
            "gain": gain_or_nan(sim.ops(), &prepared).ok().filter(|g| g.is_finite()),
            "cfi": per_sigma,
        }),
    );
    bundle.table("run_probs", &probs);
    if cfg.husimi.enabled {
        let qspec = QGridSpec { n_theta: cfg.husimi.n_theta, n_phi: cfg.husimi.n_phi, normalized: cfg.husimi.normalized };
        let q = husimi_q(sim.ops(), &prepared, &qspec)?;
        bundle.qgrid("run_q", &q, &format!(",chi_t={}", fmt_num(cfg.t1)));
    }
    Ok(bundle)
}
