//! Figure presets. Each preset is a base configuration; user fragments are
//! laid over it before resolution.

use rayon::prelude::*;
use serde_json::json;
use tnt_core::dynamics::{ProtocolSpec, Readout, Simulator};
use tnt_core::husimi::{husimi_q, QGridSpec};
use tnt_core::metrology::{
    cfi, hellinger, outcome_distribution, qfi_pure, FisherMethod, NoiseModel,
};
use tnt_core::optimizer::{
    budget_sweep, echo_time_sweep, noise_sweep, optimize_basis, snl_crossing, AsymmetricEchoMode, BasisMode,
    BudgetSweepSpec, EchoSweepSpec, NoiseSweepSpec, SweepSettings,
};
use tnt_core::spin::BasisSpec;

use super::{fmt_num, gain_or_nan, generator_for, simulator};
use crate::config::{HamiltonianChoice, Resolved, RunConfig, ScanConfig};
use crate::error::CliResult;
use crate::output::{Bundle, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
        }
    }

    pub fn base(&self) -> RunConfig {
        let mut cfg = RunConfig {
            n_atoms: Some(100),
            hamiltonian: Some(HamiltonianChoice::Tnt),
            lambda: Some(2.0),
            ..Default::default()
        };
        let mut scan = ScanConfig::default();
        match self {
            Preset::Fig1 => {}
            Preset::Fig2 => {
                cfg.sigmas = Some(vec![0.1, 1.0, 5.0]);
                cfg.basis = Some(BasisMode::FixedSx);
                scan.times = Some(crate::config::Grid::new(0.0, 0.12, 0.0025));
            }
            Preset::Fig3 => {
                cfg.n_atoms = Some(20);
                cfg.t1 = Some(0.275);
                cfg.sigmas = Some(vec![1.0]);
                cfg.husimi = Some(crate::config::HusimiConfig { enabled: Some(true), ..Default::default() });
            }
            Preset::Fig4 => {
                cfg.basis = Some(BasisMode::Optimized);
                scan.asym_opt = Some(true);
            }
            Preset::Fig5 => {
                cfg.basis = Some(BasisMode::Optimized);
                cfg.sigmas = Some(vec![0.1, 5.0]);
            }
            Preset::Fig6 => {
                cfg.basis = Some(BasisMode::Optimized);
                cfg.sigmas = Some(vec![0.1, 1.0, 5.0]);
            }
        }
        cfg.scan = Some(scan);
        cfg
    }

    pub fn compute(&self, cfg: &Resolved, bundle: &mut Bundle) -> CliResult<()> {
        match self {
            Preset::Fig1 => fig1(cfg, bundle),
            Preset::Fig2 => fig2(cfg, bundle),
            Preset::Fig3 => fig3(cfg, bundle),
            Preset::Fig4 => fig4(cfg, bundle),
            Preset::Fig5 => fig5(cfg, bundle),
            Preset::Fig6 => fig6(cfg, bundle),
        }
    }
}

pub fn fig(preset: Preset, cfg: &Resolved) -> CliResult<Bundle> {
    let mut bundle = Bundle::new(cfg);
    preset.compute(cfg, &mut bundle)?;
    Ok(bundle)
}

fn settings(cfg: &Resolved) -> SweepSettings {
    SweepSettings { phi_eval: cfg.phi_eval, basis_mode: cfg.basis, search: cfg.search }
}

fn sigma_column(sigma: f64) -> String {
    format!("fc_sigma_{}", fmt_num(sigma))
}

/// QFI and squeezing gain versus preparation time for TNT and OAT, plus
/// Husimi snapshots of the TNT state.
fn fig1(cfg: &Resolved, bundle: &mut Bundle) -> CliResult<()> {
    let tnt = simulator(cfg)?;
    let oat = Simulator::oat(cfg.n_atoms)?;
    let psi0 = tnt.initial_state()?;
    let times = cfg.scan.times.values();
    let n = cfg.n_atoms as f64;
    let rows: Vec<[f64; 4]> = times
        .par_iter()
        .map(|&t| -> CliResult<[f64; 4]> {
            let a = tnt.prepare(&psi0, t)?;
            let b = oat.prepare(&psi0, t)?;
            Ok([
                qfi_pure(tnt.ops(), &a)?.value / n,
                qfi_pure(oat.ops(), &b)?.value / n,
                gain_or_nan(tnt.ops(), &a)?,
                gain_or_nan(oat.ops(), &b)?,
            ])
        })
        .collect::<CliResult<_>>()?;
    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<f64>>();
    let table = Table::new()
        .with("chi_t", times.clone())
        .with("fq_over_n_tnt", col(0))
        .with("fq_over_n_oat", col(1))
        .with("gain_tnt", col(2))
        .with("gain_oat", col(3))
        .with("heisenberg_over_n", vec![n; times.len()]);
    bundle.table("fig1_gain", &table);

    let spec = QGridSpec { n_theta: cfg.husimi.n_theta, n_phi: cfg.husimi.n_phi, normalized: cfg.husimi.normalized };
    for (i, &t) in cfg.scan.snapshots.iter().enumerate() {
        let psi = tnt.prepare(&psi0, t)?;
        let q = husimi_q(tnt.ops(), &psi, &spec)?;
        bundle.qgrid(&format!("fig1_q_{}", i + 1), &q, &format!(",chi_t={}", fmt_num(t)));
    }
    Ok(())
}

/// CFI versus preparation time under noise, without and with echo.
fn fig2(cfg: &Resolved, bundle: &mut Bundle) -> CliResult<()> {
    let sim = simulator(cfg)?;
    let psi0 = sim.initial_state()?;
    let times = cfg.scan.times.values();
    for (stem, readout) in [("fig2_a", ReadoutKind::None), ("fig2_b", ReadoutKind::Echo)] {
        let rows: Vec<(f64, Vec<f64>)> = times
            .par_iter()
            .map(|&t1| -> CliResult<(f64, Vec<f64>)> {
                let prepared = sim.prepare(&psi0, t1)?;
                let fq = qfi_pure(sim.ops(), &prepared)?.value;
                let spec = ProtocolSpec {
                    hamiltonian: *sim.hamiltonian_spec(),
                    t1,
                    readout: readout.readout(),
                    phi: cfg.phi_eval,
                    generator_dir: generator_for(cfg, &sim, &prepared)?,
                    measurement: BasisSpec::Sx,
                };
                let fc = cfg
                    .sigmas
                    .iter()
                    .map(|&s| -> CliResult<f64> {
                        let noise = NoiseModel::new(s)?;
                        Ok(match cfg.basis {
                            BasisMode::FixedSx => {
                                cfi(&sim, &spec, &psi0, noise, cfg.phi_eval, FisherMethod::Analytic)?.value
                            }
                            BasisMode::Optimized => optimize_basis(&sim, &spec, &psi0, noise, &cfg.search)?.best.fc,
                        })
                    })
                    .collect::<CliResult<_>>()?;
                Ok((fq, fc))
            })
            .collect::<CliResult<_>>()?;
        let mut table = Table::new()
            .with("chi_t", times.clone())
            .with("qfi", rows.iter().map(|r| r.0).collect());
        for (k, &s) in cfg.sigmas.iter().enumerate() {
            table = table.with(sigma_column(s), rows.iter().map(|r| r.1[k]).collect());
        }
        table = table.with("snl", vec![cfg.n_atoms as f64; times.len()]);
        bundle.table(stem, &table);
    }
    Ok(())
}

#[derive(Clone, Copy)]
enum ReadoutKind {
    None,
    Echo,
}

impl ReadoutKind {
    fn readout(&self) -> Readout {
        match self {
            ReadoutKind::None => Readout::None,
            ReadoutKind::Echo => Readout::Echo,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            ReadoutKind::None => "trivial",
            ReadoutKind::Echo => "echo",
        }
    }
}

/// Husimi functions, `S_x` distributions and Hellinger distances for a phase
/// step, without and with echo.
fn fig3(cfg: &Resolved, bundle: &mut Bundle) -> CliResult<()> {
    let sim = simulator(cfg)?;
    let psi0 = sim.initial_state()?;
    let prepared = sim.prepare(&psi0, cfg.t1)?;
    let generator = generator_for(cfg, &sim, &prepared)?;
    let dphi = cfg.scan.phase_shift;
    let sigma = cfg.sigmas[0];
    let noise = NoiseModel::new(sigma)?;
    let qspec = QGridSpec { n_theta: cfg.husimi.n_theta, n_phi: cfg.husimi.n_phi, normalized: cfg.husimi.normalized };
    let m_values = sim.system().m_values();
    let mut distances = serde_json::Map::new();
    for kind in [ReadoutKind::None, ReadoutKind::Echo] {
        let spec = ProtocolSpec {
            hamiltonian: *sim.hamiltonian_spec(),
            t1: cfg.t1,
            readout: kind.readout(),
            phi: 0.0,
            generator_dir: generator,
            measurement: BasisSpec::Sx,
        };
        let mut ideal = Vec::new();
        let mut noisy = Vec::new();
        for (tag, phi) in [("phi0", 0.0), ("dphi", dphi)] {
            let mut at = spec;
            at.phi = phi;
            let psi = sim.run(&at, &psi0)?;
            let q = husimi_q(sim.ops(), &psi, &qspec)?;
            bundle.qgrid(&format!("fig3_q_{}_{tag}", kind.label()), &q, &format!(",phi={}", fmt_num(phi)));
            let p = outcome_distribution(&sim, &spec, &psi0, NoiseModel::ideal(), phi)?;
            let pn = outcome_distribution(&sim, &spec, &psi0, noise, phi)?;
            let table = Table::new()
                .with("m", m_values.clone())
                .with("p", p.probs().to_vec())
                .with(format!("p_sigma_{}", fmt_num(sigma)), pn.probs().to_vec());
            bundle.table(&format!("fig3_probs_{}_{tag}", kind.label()), &table);
            ideal.push(p);
            noisy.push(pn);
        }
        distances.insert(
            kind.label().into(),
            json!({
                "hellinger_sq_ideal": hellinger(&ideal[0], &ideal[1])?,
                "hellinger_sq_noisy": hellinger(&noisy[0], &noisy[1])?,
            }),
        );
    }
    bundle.summary(
        "fig3_hellinger",
        json!({
            "n_atoms": cfg.n_atoms,
            "chi_t": cfg.t1,
            "phase_shift": dphi,
            "sigma": sigma,
            "generator": generator,
            "distances": distances,
        }),
    );
    Ok(())
}

/// CFI versus detection noise for each readout, one panel per `t1`.
fn fig4(cfg: &Resolved, bundle: &mut Bundle) -> CliResult<()> {
    let sim = simulator(cfg)?;
    let sigmas = cfg.scan.sigma.values();
    let n = cfg.n_atoms as f64;
    let mut crossings = serde_json::Map::new();
    for &t1 in &cfg.scan.t1_values {
        let spec = NoiseSweepSpec {
            t1,
            sigmas: sigmas.clone(),
            asym: AsymmetricEchoMode::Fixed { ratio: cfg.scan.asym_ratio },
            asym_opt: cfg.scan.asym_opt.then(|| cfg.scan.asym_opt_ratio.values()),
            pseudo_ratio: cfg.scan.pseudo_ratio,
            settings: settings(cfg),
        };
        let r = noise_sweep(&sim, &spec)?;
        let col = |label: &str| r.series(label).map(|s| s.values.clone()).unwrap_or_default();
        let table = Table::new()
            .with("sigma", sigmas.clone())
            .with("fc_trivial", col("trivial"))
            .with("fc_echo", col("echo"))
            .with("fc_asym", col("asym"))
            .with("fc_pseudo", col("pseudo"))
            .with("qcrb", col("qcrb"))
            .with("snl", col("snl"));
        let tag = fmt_num(t1);
        bundle.table(&format!("fig4_t1_{tag}"), &table);
        if let Some(opt) = r.series("asym_opt") {
            let table = Table::new()
                .with("sigma", sigmas.clone())
                .with("fc_asym_opt", opt.values.clone())
                .with("ratio", opt.ratios.clone().unwrap_or_default());
            bundle.table(&format!("fig4_asym_opt_t1_{tag}"), &table);
        }
        let mut c = serde_json::Map::new();
        for s in r.series.iter().filter(|s| s.label != "qcrb" && s.label != "snl") {
            c.insert(s.label.clone(), json!(snl_crossing(&sigmas, &s.values, n)));
        }
        crossings.insert(tag, serde_json::Value::Object(c));
    }
    bundle.summary(
        "fig4_crossings",
        json!({
            "n_atoms": cfg.n_atoms,
            "asym_ratio": cfg.scan.asym_ratio,
            "pseudo_ratio": cfg.scan.pseudo_ratio,
            "basis": cfg.basis,
            "sigma_star": crossings,
        }),
    );
    Ok(())
}

/// CFI versus echo duration `t2 / t1`, one panel per `t1`.
fn fig5(cfg: &Resolved, bundle: &mut Bundle) -> CliResult<()> {
    let sim = simulator(cfg)?;
    let ratios = cfg.scan.ratio.values();
    for &t1 in &cfg.scan.t1_values {
        let mut table = Table::new().with("ratio", ratios.clone());
        let mut refs = None;
        for &sigma in &cfg.sigmas {
            let r = echo_time_sweep(&sim, &EchoSweepSpec { t1, ratios: ratios.clone(), sigma, settings: settings(cfg) })?;
            table = table.with(sigma_column(sigma), r.series("fc").map(|s| s.values.clone()).unwrap_or_default());
            refs.get_or_insert(r);
        }
        if let Some(r) = refs {
            for label in ["qcrb", "snl"] {
                table = table.with(label, r.series(label).map(|s| s.values.clone()).unwrap_or_default());
            }
        }
        bundle.table(&format!("fig5_t1_{}", fmt_num(t1)), &table);
    }
    Ok(())
}

/// CFI versus preparation time at fixed total time.
fn fig6(cfg: &Resolved, bundle: &mut Bundle) -> CliResult<()> {
    let sim = simulator(cfg)?;
    let t1s = cfg.scan.t1.values();
    let mut table = Table::new().with("t1", t1s.clone());
    let mut refs = None;
    for &sigma in &cfg.sigmas {
        let r = budget_sweep(
            &sim,
            &BudgetSweepSpec { total_time: cfg.scan.total_time, t1s: t1s.clone(), sigma, settings: settings(cfg) },
        )?;
        table = table.with(sigma_column(sigma), r.series("fc").map(|s| s.values.clone()).unwrap_or_default());
        refs.get_or_insert(r);
    }
    if let Some(r) = refs {
        for label in ["qcrb", "snl"] {
            table = table.with(label, r.series(label).map(|s| s.values.clone()).unwrap_or_default());
        }
    }
    bundle.table("fig6", &table);
    Ok(())
}
