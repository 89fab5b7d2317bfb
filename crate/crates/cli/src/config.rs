//! TOML run configuration. Every key is optional so a file can act as a
//! fragment over a preset; [`RunConfig::resolve`] fills the rest and
//! validates physical parameters before anything is computed.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tnt_core::dynamics::{HamiltonianSpec, ProtocolSpec, Readout};
use tnt_core::optimizer::{BasisMode, BasisSearchSpec};
use tnt_core::spin::{unit_vector, BasisSpec, SpinSystem};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianChoice {
    Tnt,
    Oat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutChoice {
    None,
    Echo,
    AsymmetricEcho,
    PseudoEcho,
    Rotation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementChoice {
    Sx,
    Sz,
    Along,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub const fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    fn check(&self, key: &str) -> CliResult<()> {
        let ok = [self.start, self.stop, self.step].iter().all(|v| v.is_finite())
            && self.step > 0.0
            && self.stop >= self.start;
        if !ok {
            return Err(CliError::Config(format!("{key}: need finite start <= stop and step > 0")));
        }
        if (self.stop - self.start) / self.step > 1e6 {
            return Err(CliError::Config(format!("{key}: more than a million points")));
        }
        Ok(())
    }

    /// `start, start + step, ...` up to `stop` inclusive (with a small slack).
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + self.step * i as f64).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    /// Preparation times for time scans (fig1, fig2).
    pub times: Option<Grid>,
    /// Husimi snapshot times (fig1).
    pub snapshots: Option<Vec<f64>>,
    /// Preparation times, one panel each (fig4, fig5).
    pub t1_values: Option<Vec<f64>>,
    pub sigma: Option<Grid>,
    /// `t_2 / t_1` grid (fig5).
    pub ratio: Option<Grid>,
    /// `t_1` grid at fixed total time (fig6).
    pub t1: Option<Grid>,
    pub total_time: Option<f64>,
    /// `t_2 / t_1` of the asymmetric echo.
    pub asym_ratio: Option<f64>,
    /// Also pick `t_2 / t_1` per noise level from `asym_opt_ratio`.
    pub asym_opt: Option<bool>,
    pub asym_opt_ratio: Option<Grid>,
    pub pseudo_ratio: Option<f64>,
    /// Phase difference between compared distributions (fig3).
    pub phase_shift: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HusimiConfig {
    pub enabled: Option<bool>,
    pub n_theta: Option<usize>,
    pub n_phi: Option<usize>,
    pub normalized: Option<bool>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub grid: Option<usize>,
    pub refine: Option<usize>,
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(alias = "N")]
    pub n_atoms: Option<usize>,
    pub hamiltonian: Option<HamiltonianChoice>,
    pub lambda: Option<f64>,
    pub t1: Option<f64>,
    pub readout: Option<ReadoutChoice>,
    /// Readout time; alternatively `ratio = t2 / t1`.
    pub t2: Option<f64>,
    pub ratio: Option<f64>,
    pub rotation_axis: Option<[f64; 3]>,
    pub rotation_angle: Option<f64>,
    /// Phase at which Fisher information is evaluated.
    pub phi_eval: Option<f64>,
    /// Phase of the reported outcome distribution.
    pub phi: Option<f64>,
    /// Generator direction; QFI-optimal when absent.
    pub generator: Option<[f64; 3]>,
    pub measurement: Option<MeasurementChoice>,
    pub measurement_dir: Option<[f64; 3]>,
    pub sigmas: Option<Vec<f64>>,
    pub basis: Option<BasisMode>,
    pub format: Option<OutputFormat>,
    pub out: Option<String>,
    pub scan: Option<ScanConfig>,
    pub husimi: Option<HusimiConfig>,
    pub search: Option<SearchConfig>,
}

macro_rules! overlay {
    ($base:expr, $top:expr; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: &RunConfig) -> Self {
        overlay!(self, top; n_atoms, hamiltonian, lambda, t1, readout, t2, ratio, rotation_axis,
            rotation_angle, phi_eval, phi, generator, measurement, measurement_dir, sigmas, basis,
            format, out);
        if let Some(t) = &top.scan {
            let s = self.scan.get_or_insert_with(Default::default);
            overlay!(s, t; times, snapshots, t1_values, sigma, ratio, t1, total_time, asym_ratio,
                asym_opt, asym_opt_ratio, pseudo_ratio, phase_shift);
        }
        if let Some(t) = &top.husimi {
            let h = self.husimi.get_or_insert_with(Default::default);
            overlay!(h, t; enabled, n_theta, n_phi, normalized);
        }
        if let Some(t) = &top.search {
            let s = self.search.get_or_insert_with(Default::default);
            overlay!(s, t; grid, refine, tolerance);
        }
        // t2 and ratio are alternatives; the later layer wins
        if top.t2.is_some() && top.ratio.is_none() {
            self.ratio = None;
        }
        if top.ratio.is_some() && top.t2.is_none() {
            self.t2 = None;
        }
        self
    }

    pub fn resolve(&self) -> CliResult<Resolved> {
        let n_atoms = self.n_atoms.unwrap_or(100);
        SpinSystem::new(n_atoms).map_err(|_| CliError::Config("n_atoms must be >= 1".into()))?;
        if n_atoms > 2000 {
            return Err(CliError::Config(format!("n_atoms = {n_atoms} is too large for dense matrices")));
        }
        let hamiltonian = self.hamiltonian.unwrap_or(HamiltonianChoice::Tnt);
        let lambda = self.lambda.unwrap_or(2.0);
        positive("lambda", lambda)?;
        let t1 = self.t1.unwrap_or(0.0);
        non_negative("t1", t1)?;
        if self.t2.is_some() && self.ratio.is_some() {
            return Err(CliError::Config("set only one of t2 and ratio".into()));
        }
        let t2 = match (self.t2, self.ratio) {
            (Some(t2), _) => t2,
            (None, Some(r)) => {
                non_negative("ratio", r)?;
                r * t1
            }
            (None, None) => t1,
        };
        non_negative("t2", t2)?;
        let readout = self.readout.unwrap_or(ReadoutChoice::None);
        let rotation_axis = self.rotation_axis.unwrap_or([1.0, 0.0, 0.0]);
        unit_vector(rotation_axis).map_err(|e| CliError::Config(format!("rotation_axis: {e}")))?;
        let rotation_angle = self.rotation_angle.unwrap_or(0.0);
        finite("rotation_angle", rotation_angle)?;
        let phi_eval = self.phi_eval.unwrap_or(tnt_core::metrology::DEFAULT_PHI_EVAL);
        finite("phi_eval", phi_eval)?;
        let phi = self.phi.unwrap_or(0.0);
        finite("phi", phi)?;
        if let Some(g) = self.generator {
            unit_vector(g).map_err(|e| CliError::Config(format!("generator: {e}")))?;
        }
        let measurement = self.measurement.unwrap_or(MeasurementChoice::Sx);
        let measurement_dir = self.measurement_dir.unwrap_or([1.0, 0.0, 0.0]);
        unit_vector(measurement_dir).map_err(|e| CliError::Config(format!("measurement_dir: {e}")))?;
        let sigmas = self.sigmas.clone().unwrap_or_else(|| vec![0.0]);
        if sigmas.is_empty() {
            return Err(CliError::Config("sigmas must not be empty".into()));
        }
        for &s in &sigmas {
            non_negative("sigmas", s)?;
        }

        let scan = self.scan.clone().unwrap_or_default();
        let times = scan.times.unwrap_or(Grid::new(0.0, 0.12, 0.0005));
        times.check("scan.times")?;
        non_negative("scan.times.start", times.start)?;
        let sigma_grid = scan.sigma.unwrap_or(Grid::new(0.0, 60.0, 0.5));
        sigma_grid.check("scan.sigma")?;
        non_negative("scan.sigma.start", sigma_grid.start)?;
        let ratio_grid = scan.ratio.unwrap_or(Grid::new(0.5, 3.0, 0.05));
        ratio_grid.check("scan.ratio")?;
        positive("scan.ratio.start", ratio_grid.start)?;
        let total_time = scan.total_time.unwrap_or(0.1);
        positive("scan.total_time", total_time)?;
        let t1_grid = scan.t1.unwrap_or(Grid::new(0.005, 0.070, 0.0025));
        t1_grid.check("scan.t1")?;
        if t1_grid.start <= 0.0 || t1_grid.values().last().map_or(true, |&t| t >= total_time) {
            return Err(CliError::Config("scan.t1 must lie strictly inside (0, scan.total_time)".into()));
        }
        let asym_opt_ratio = scan.asym_opt_ratio.unwrap_or(Grid::new(1.0, 5.0, 0.1));
        asym_opt_ratio.check("scan.asym_opt_ratio")?;
        let resolved_scan = ResolvedScan {
            times,
            snapshots: scan.snapshots.unwrap_or_else(|| vec![0.0, 0.0238, 0.0477, 0.0715]),
            t1_values: scan.t1_values.unwrap_or_else(|| vec![0.027, 0.072]),
            sigma: sigma_grid,
            ratio: ratio_grid,
            t1: t1_grid,
            total_time,
            asym_ratio: scan.asym_ratio.unwrap_or(2.0),
            asym_opt: scan.asym_opt.unwrap_or(false),
            asym_opt_ratio,
            pseudo_ratio: scan.pseudo_ratio.unwrap_or(1.0),
            phase_shift: scan.phase_shift.unwrap_or(1.0 / (2.0 * (n_atoms as f64).sqrt())),
        };
        for &t in resolved_scan.snapshots.iter().chain(&resolved_scan.t1_values) {
            non_negative("scan times", t)?;
        }
        non_negative("scan.asym_ratio", resolved_scan.asym_ratio)?;
        non_negative("scan.pseudo_ratio", resolved_scan.pseudo_ratio)?;
        finite("scan.phase_shift", resolved_scan.phase_shift)?;

        let h = self.husimi.clone().unwrap_or_default();
        let husimi = ResolvedHusimi {
            enabled: h.enabled.unwrap_or(false),
            n_theta: h.n_theta.unwrap_or(90),
            n_phi: h.n_phi.unwrap_or(180),
            normalized: h.normalized.unwrap_or(true),
        };
        if husimi.n_theta < 2 || husimi.n_phi < 1 {
            return Err(CliError::Config("husimi grid needs n_theta >= 2 and n_phi >= 1".into()));
        }
        let s = self.search.clone().unwrap_or_default();
        let defaults = BasisSearchSpec::default();
        let search = BasisSearchSpec {
            grid: s.grid.unwrap_or(defaults.grid),
            refine: s.refine.unwrap_or(defaults.refine),
            tolerance: s.tolerance.unwrap_or(defaults.tolerance),
        };
        search.validate().map_err(|e| CliError::Config(format!("search: {e}")))?;

        Ok(Resolved {
            n_atoms,
            hamiltonian,
            lambda,
            t1,
            readout,
            t2,
            rotation_axis,
            rotation_angle,
            phi_eval,
            phi,
            generator: self.generator,
            measurement,
            measurement_dir,
            sigmas,
            basis: self.basis.unwrap_or(BasisMode::FixedSx),
            format: self.format.unwrap_or(OutputFormat::Csv),
            scan: resolved_scan,
            husimi,
            search,
        })
    }
}

fn finite(key: &str, v: f64) -> CliResult<()> {
    if !v.is_finite() {
        return Err(CliError::Config(format!("{key} must be finite")));
    }
    Ok(())
}

fn non_negative(key: &str, v: f64) -> CliResult<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(CliError::Config(format!("{key} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

fn positive(key: &str, v: f64) -> CliResult<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(CliError::Config(format!("{key} must be finite and > 0, got {v}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedScan {
    pub times: Grid,
    pub snapshots: Vec<f64>,
    pub t1_values: Vec<f64>,
    pub sigma: Grid,
    pub ratio: Grid,
    pub t1: Grid,
    pub total_time: f64,
    pub asym_ratio: f64,
    pub asym_opt: bool,
    pub asym_opt_ratio: Grid,
    pub pseudo_ratio: f64,
    pub phase_shift: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedHusimi {
    pub enabled: bool,
    pub n_theta: usize,
    pub n_phi: usize,
    pub normalized: bool,
}

/// Fully specified configuration. Its canonical JSON is what gets hashed;
/// the output directory is not part of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolved {
    pub n_atoms: usize,
    pub hamiltonian: HamiltonianChoice,
    pub lambda: f64,
    pub t1: f64,
    pub readout: ReadoutChoice,
    pub t2: f64,
    pub rotation_axis: [f64; 3],
    pub rotation_angle: f64,
    pub phi_eval: f64,
    pub phi: f64,
    pub generator: Option<[f64; 3]>,
    pub measurement: MeasurementChoice,
    pub measurement_dir: [f64; 3],
    pub sigmas: Vec<f64>,
    pub basis: BasisMode,
    pub format: OutputFormat,
    pub scan: ResolvedScan,
    pub husimi: ResolvedHusimi,
    pub search: BasisSearchSpec,
}

impl Resolved {
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn system(&self) -> SpinSystem {
        SpinSystem::new(self.n_atoms).expect("validated in resolve")
    }

    pub fn hamiltonian_spec(&self) -> HamiltonianSpec {
        let system = self.system();
        match self.hamiltonian {
            HamiltonianChoice::Tnt => HamiltonianSpec::tnt(system, self.lambda).expect("validated in resolve"),
            HamiltonianChoice::Oat => HamiltonianSpec::oat(system),
        }
    }

    pub fn readout_at(&self, t2: f64) -> Readout {
        match self.readout {
            ReadoutChoice::None => Readout::None,
            ReadoutChoice::Echo => Readout::Echo,
            ReadoutChoice::AsymmetricEcho => Readout::AsymmetricEcho { t2 },
            ReadoutChoice::PseudoEcho => Readout::PseudoEcho { t2 },
            ReadoutChoice::Rotation => Readout::Rotation { axis: self.rotation_axis, angle: self.rotation_angle },
        }
    }

    pub fn measurement_basis(&self) -> CliResult<BasisSpec> {
        Ok(match self.measurement {
            MeasurementChoice::Sx => BasisSpec::Sx,
            MeasurementChoice::Sz => BasisSpec::Sz,
            MeasurementChoice::Along => BasisSpec::along(self.measurement_dir)?,
        })
    }

    /// Single protocol described by the top-level keys; `generator` is the
    /// explicit direction or the one supplied by the caller.
    pub fn protocol(&self, generator: [f64; 3]) -> CliResult<ProtocolSpec> {
        let spec = ProtocolSpec {
            hamiltonian: self.hamiltonian_spec(),
            t1: self.t1,
            readout: self.readout_at(self.t2),
            phi: self.phi,
            generator_dir: generator,
            measurement: self.measurement_basis()?,
        };
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml("n_atoms = 4\nbogus_key = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
        assert_eq!(err.exit_code(), 2);
        let err = RunConfig::from_toml("[scan]\nsigmaa = 1\n").unwrap_err();
        assert!(err.to_string().contains("sigmaa"), "{err}");
    }

    #[test]
    fn overlay_replaces_only_set_fields() {
        let base = RunConfig::from_toml("n_atoms = 100\nt1 = 0.1\n[scan]\ntotal_time = 0.2\nasym_ratio = 3.0\n").unwrap();
        let top = RunConfig::from_toml("N = 20\n[scan]\nasym_ratio = 1.5\n").unwrap();
        let merged = base.overlay(&top);
        assert_eq!(merged.n_atoms, Some(20));
        assert_eq!(merged.t1, Some(0.1));
        let scan = merged.scan.unwrap();
        assert_eq!(scan.total_time, Some(0.2));
        assert_eq!(scan.asym_ratio, Some(1.5));
    }

    #[test]
    fn validation_rejects_bad_physics() {
        for text in ["n_atoms = 0", "lambda = -1.0", "t1 = -0.1", "sigmas = [-1.0]", "t2 = 0.1\nratio = 2.0",
            "generator = [1.0, 1.0, 0.0]", "[scan]\nsigma = { start = 0.0, stop = 1.0, step = 0.0 }"]
        {
            let cfg = RunConfig::from_toml(text).unwrap();
            assert!(matches!(cfg.resolve(), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn hash_ignores_output_dir_and_tracks_physics() {
        let a = RunConfig::from_toml("t1 = 0.1\nout = \"x\"").unwrap().resolve().unwrap();
        let b = RunConfig::from_toml("t1 = 0.1\nout = \"y\"").unwrap().resolve().unwrap();
        let c = RunConfig::from_toml("t1 = 0.2").unwrap().resolve().unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(Grid::new(0.0, 1.0, 0.25).values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(Grid::new(0.005, 0.070, 0.0025).values().len(), 27);
    }

    #[test]
    fn ratio_resolves_against_t1() {
        let r = RunConfig::from_toml("t1 = 0.05\nreadout = \"asymmetric_echo\"\nratio = 2.0").unwrap().resolve().unwrap();
        assert!((r.t2 - 0.1).abs() < 1e-15);
    }
}
