use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::{BasisSearchSpec, PlaneOptimum, SignalSearch};
use crate::dynamics::{HamiltonianKind, ProtocolSpec, Readout, Simulator};
use crate::error::{Error, Result};
use crate::metrology::{
    check_dropped, fisher_from_amplitudes, qfi_pure, Measurement, NoiseKernel, NoiseModel, DEFAULT_PHI_EVAL,
};
use crate::spin::{BasisSpec, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    FixedSx,
    Optimized,
}

/// How the asymmetric-echo readout time `t_2` is chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AsymmetricEchoMode {
    Fixed { ratio: f64 },
    /// Best `t_2 / t_1` on the grid, chosen per noise level.
    Optimized { ratios: Vec<f64> },
}

impl AsymmetricEchoMode {
    /// `t_2 / t_1` from 1 to 5 in steps of 0.1.
    pub fn default_grid() -> Self {
        AsymmetricEchoMode::Optimized { ratios: (0..=40).map(|i| 1.0 + 0.1 * i as f64).collect() }
    }

    fn ratios(&self) -> Vec<f64> {
        match self {
            AsymmetricEchoMode::Fixed { ratio } => vec![*ratio],
            AsymmetricEchoMode::Optimized { ratios } => ratios.clone(),
        }
    }
}

/// Options shared by every sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub phi_eval: f64,
    pub basis_mode: BasisMode,
    pub search: BasisSearchSpec,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { phi_eval: DEFAULT_PHI_EVAL, basis_mode: BasisMode::Optimized, search: BasisSearchSpec::default() }
    }
}

/// One curve of a sweep, aligned with [`SweepResult::axis_values`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub values: Vec<f64>,
    /// Chosen measurement per point, when the basis was optimized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<PlaneOptimum>>,
    /// Chosen `t_2 / t_1` per point, when it was optimized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<f64>>,
}

impl Series {
    fn reference(label: &str, values: Vec<f64>) -> Self {
        Self { label: label.into(), values, basis: None, ratios: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub n_atoms: usize,
    /// `None` for one-axis twisting.
    pub lambda: Option<f64>,
    pub t1: Option<f64>,
    pub total_time: Option<f64>,
    pub sigma: Option<f64>,
    pub phi_eval: f64,
    pub basis_mode: BasisMode,
    pub deterministic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Name of the swept quantity: `sigma`, `ratio` or `t1`.
    pub axis: String,
    pub axis_values: Vec<f64>,
    pub series: Vec<Series>,
    pub meta: SweepMeta,
}

impl SweepResult {
    pub fn series(&self, label: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.label == label)
    }
}

/// A prepared protocol with its phase signal, ready to be scored at any
/// noise level.
struct Probe {
    amplitudes: Option<(nalgebra::DVector<num_complex::Complex64>, nalgebra::DVector<num_complex::Complex64>)>,
    search: Option<SignalSearch>,
    n_atoms: usize,
}

struct Scored {
    fc: f64,
    basis: Option<PlaneOptimum>,
}

impl Probe {
    fn new(sim: &Simulator, prepared: &StateVector, spec: &ProtocolSpec, settings: &SweepSettings, sx: &Measurement) -> Result<Self> {
        let signal = sim.signal_from_prepared(spec, prepared.amplitudes(), settings.phi_eval)?;
        let n_atoms = sim.system().n_atoms();
        Ok(match settings.basis_mode {
            BasisMode::FixedSx => Self {
                amplitudes: Some((sx.amplitudes(&signal.psi), sx.amplitudes(&signal.dpsi))),
                search: None,
                n_atoms,
            },
            BasisMode::Optimized => Self {
                amplitudes: None,
                search: Some(SignalSearch::new(sim.ops(), spec.generator_dir, &signal)?),
                n_atoms,
            },
        })
    }

    fn score(&self, kernel: &NoiseKernel, search: &BasisSearchSpec) -> Result<Scored> {
        if let Some(s) = &self.search {
            let best = s.optimize(kernel, search)?.best;
            return Ok(Scored { fc: best.fc, basis: Some(best) });
        }
        let (a, da) = self.amplitudes.as_ref().expect("probe holds amplitudes or a search");
        let (fc, bound) = fisher_from_amplitudes(a, da, kernel);
        check_dropped(fc, bound, self.n_atoms)?;
        Ok(Scored { fc, basis: None })
    }
}

/// Simulator plus the state prepared for time `t1` and its QFI-optimal
/// generator.
struct Prepared<'a> {
    sim: &'a Simulator,
    t1: f64,
    state: StateVector,
    generator: [f64; 3],
    qfi: f64,
    sx: Measurement,
}

impl<'a> Prepared<'a> {
    fn new(sim: &'a Simulator, t1: f64) -> Result<Self> {
        let psi0 = sim.initial_state()?;
        let state = sim.prepare(&psi0, t1)?;
        let q = qfi_pure(sim.ops(), &state)?;
        let sx = Measurement::new(sim.ops(), BasisSpec::Sx)?;
        Ok(Self { sim, t1, state, generator: q.optimal_dir, qfi: q.value, sx })
    }

    fn probe(&self, readout: Readout, settings: &SweepSettings) -> Result<Probe> {
        let spec = ProtocolSpec {
            hamiltonian: *self.sim.hamiltonian_spec(),
            t1: self.t1,
            readout,
            phi: settings.phi_eval,
            generator_dir: self.generator,
            measurement: BasisSpec::Sx,
        };
        spec.validate()?;
        Probe::new(self.sim, &self.state, &spec, settings, &self.sx)
    }
}

fn meta(sim: &Simulator, settings: &SweepSettings) -> SweepMeta {
    let lambda = match sim.hamiltonian_spec().kind {
        HamiltonianKind::Tnt { lambda } => Some(lambda),
        HamiltonianKind::Oat => None,
    };
    SweepMeta {
        n_atoms: sim.system().n_atoms(),
        lambda,
        t1: None,
        total_time: None,
        sigma: None,
        phi_eval: settings.phi_eval,
        basis_mode: settings.basis_mode,
        deterministic: true,
    }
}

fn check_settings(settings: &SweepSettings) -> Result<()> {
    if !settings.phi_eval.is_finite() {
        return Err(Error::InvalidParameter("phi_eval must be finite".into()));
    }
    settings.search.validate()
}

fn check_grid(name: &str, grid: &[f64], ascending: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} grid has non-finite values")));
    }
    if ascending && grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!("{name} grid must be strictly ascending")));
    }
    Ok(())
}

fn collect_series(label: &str, scored: Vec<Scored>, optimized: bool) -> Series {
    let values = scored.iter().map(|s| s.fc).collect();
    let basis = optimized.then(|| scored.iter().filter_map(|s| s.basis).collect());
    Series { label: label.into(), values, basis, ratios: None }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSweepSpec {
    pub t1: f64,
    pub sigmas: Vec<f64>,
    /// Readout time of the asymmetric echo for the `asym` series.
    pub asym: AsymmetricEchoMode,
    /// When set, an extra `asym_opt` series picks `t_2 / t_1` per noise
    /// level from this grid.
    pub asym_opt: Option<Vec<f64>>,
    /// `t_2 / t_1` of the pseudo-echo `U_2 = U_1(t_2)`.
    pub pseudo_ratio: f64,
    pub settings: SweepSettings,
}

impl NoiseSweepSpec {
    pub fn new(t1: f64, sigmas: Vec<f64>) -> Self {
        Self {
            t1,
            sigmas,
            asym: AsymmetricEchoMode::Fixed { ratio: 2.0 },
            asym_opt: None,
            pseudo_ratio: 1.0,
            settings: SweepSettings::default(),
        }
    }
}

/// Scores each probe at every noise level and keeps the best per level.
fn best_over(probes: &[(f64, Probe)], kernels: &[NoiseKernel], search: &BasisSearchSpec) -> Result<(Vec<Scored>, Vec<f64>)> {
    let rows: Vec<(Scored, f64)> = kernels
        .par_iter()
        .map(|k| {
            let mut best: Option<(Scored, f64)> = None;
            for (ratio, probe) in probes {
                let s = probe.score(k, search)?;
                // ties keep the shorter readout
                if best.as_ref().map_or(true, |(b, _)| s.fc > b.fc) {
                    best = Some((s, *ratio));
                }
            }
            best.ok_or(Error::EmptyGrid)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().unzip())
}

/// `F_c(sigma)` for the trivial readout, echo, asymmetric echo and
/// pseudo-echo, with the QCRB and shot-noise reference rows.
pub fn noise_sweep(sim: &Simulator, spec: &NoiseSweepSpec) -> Result<SweepResult> {
    check_settings(&spec.settings)?;
    check_grid("sigma", &spec.sigmas, true)?;
    let settings = &spec.settings;
    let prepared = Prepared::new(sim, spec.t1)?;
    let dim = sim.system().dim();
    let kernels: Vec<NoiseKernel> = spec
        .sigmas
        .iter()
        .map(|&s| NoiseModel::new(s).map(|n| NoiseKernel::new(dim, n)))
        .collect::<Result<_>>()?;
    let optimized = settings.basis_mode == BasisMode::Optimized;

    let probes_for = |readout: Readout, ratio: f64| -> Result<(f64, Probe)> {
        Ok((ratio, prepared.probe(readout, settings)?))
    };
    let asym_probes = |ratios: &[f64]| -> Result<Vec<(f64, Probe)>> {
        check_grid("ratio", ratios, false)?;
        ratios
            .par_iter()
            .map(|&r| probes_for(Readout::AsymmetricEcho { t2: r * spec.t1 }, r))
            .collect()
    };

    let mut series = Vec::new();
    for (label, readout) in [
        ("trivial", Readout::None),
        ("echo", Readout::Echo),
    ] {
        let (scored, _) = best_over(&[probes_for(readout, 1.0)?], &kernels, &settings.search)?;
        series.push(collect_series(label, scored, optimized));
    }

    let asym_ratios = spec.asym.ratios();
    let (scored, ratios) = best_over(&asym_probes(&asym_ratios)?, &kernels, &settings.search)?;
    let mut asym = collect_series("asym", scored, optimized);
    if matches!(spec.asym, AsymmetricEchoMode::Optimized { .. }) {
        asym.ratios = Some(ratios);
    }
    series.push(asym);

    let pseudo = Readout::PseudoEcho { t2: spec.pseudo_ratio * spec.t1 };
    let (scored, _) = best_over(&[probes_for(pseudo, spec.pseudo_ratio)?], &kernels, &settings.search)?;
    series.push(collect_series("pseudo", scored, optimized));

    if let Some(grid) = &spec.asym_opt {
        let (scored, ratios) = best_over(&asym_probes(grid)?, &kernels, &settings.search)?;
        let mut s = collect_series("asym_opt", scored, optimized);
        s.ratios = Some(ratios);
        series.push(s);
    }

    let n = spec.sigmas.len();
    series.push(Series::reference("qcrb", vec![prepared.qfi; n]));
    series.push(Series::reference("snl", vec![sim.system().n_atoms() as f64; n]));

    let mut meta = meta(sim, settings);
    meta.t1 = Some(spec.t1);
    Ok(SweepResult { axis: "sigma".into(), axis_values: spec.sigmas.clone(), series, meta })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchoSweepSpec {
    pub t1: f64,
    pub ratios: Vec<f64>,
    pub sigma: f64,
    pub settings: SweepSettings,
}

/// `F_c(t_2 / t_1)` for the readout `U_2 = U_1^dagger(t_2)`.
pub fn echo_time_sweep(sim: &Simulator, spec: &EchoSweepSpec) -> Result<SweepResult> {
    check_settings(&spec.settings)?;
    check_grid("ratio", &spec.ratios, false)?;
    if spec.ratios.iter().any(|&r| r <= 0.0) {
        return Err(Error::InvalidParameter("echo ratios must be positive".into()));
    }
    let prepared = Prepared::new(sim, spec.t1)?;
    let kernel = NoiseKernel::new(sim.system().dim(), NoiseModel::new(spec.sigma)?);
    let scored: Vec<Scored> = spec
        .ratios
        .par_iter()
        .map(|&r| {
            prepared
                .probe(Readout::AsymmetricEcho { t2: r * spec.t1 }, &spec.settings)?
                .score(&kernel, &spec.settings.search)
        })
        .collect::<Result<_>>()?;
    let n = spec.ratios.len();
    let series = vec![
        collect_series("fc", scored, spec.settings.basis_mode == BasisMode::Optimized),
        Series::reference("qcrb", vec![prepared.qfi; n]),
        Series::reference("snl", vec![sim.system().n_atoms() as f64; n]),
    ];
    let mut meta = meta(sim, &spec.settings);
    meta.t1 = Some(spec.t1);
    meta.sigma = Some(spec.sigma);
    Ok(SweepResult { axis: "ratio".into(), axis_values: spec.ratios.clone(), series, meta })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetSweepSpec {
    pub total_time: f64,
    pub t1s: Vec<f64>,
    pub sigma: f64,
    pub settings: SweepSettings,
}

/// `F_c(t_1)` at fixed total time `T`, with readout `U_2 = U_1^dagger(T - t_1)`.
/// The `qcrb` row is the QFI of the state prepared for `t_1`.
pub fn budget_sweep(sim: &Simulator, spec: &BudgetSweepSpec) -> Result<SweepResult> {
    check_settings(&spec.settings)?;
    check_grid("t1", &spec.t1s, true)?;
    let total = spec.total_time;
    if !(total.is_finite() && total > 0.0) || spec.t1s.iter().any(|&t| t <= 0.0 || t >= total) {
        return Err(Error::InvalidParameter("budget sweep needs 0 < t1 < T".into()));
    }
    let kernel = NoiseKernel::new(sim.system().dim(), NoiseModel::new(spec.sigma)?);
    let rows: Vec<(Scored, f64)> = spec
        .t1s
        .par_iter()
        .map(|&t1| {
            let prepared = Prepared::new(sim, t1)?;
            let s = prepared
                .probe(Readout::AsymmetricEcho { t2: total - t1 }, &spec.settings)?
                .score(&kernel, &spec.settings.search)?;
            Ok((s, prepared.qfi))
        })
        .collect::<Result<_>>()?;
    let (scored, qfi): (Vec<Scored>, Vec<f64>) = rows.into_iter().unzip();
    let n = spec.t1s.len();
    let series = vec![
        collect_series("fc", scored, spec.settings.basis_mode == BasisMode::Optimized),
        Series::reference("qcrb", qfi),
        Series::reference("snl", vec![sim.system().n_atoms() as f64; n]),
    ];
    let mut meta = meta(sim, &spec.settings);
    meta.total_time = Some(total);
    meta.sigma = Some(spec.sigma);
    Ok(SweepResult { axis: "t1".into(), axis_values: spec.t1s.clone(), series, meta })
}

/// First axis value where `values` falls below `level`, by linear
/// interpolation between the bracketing grid points. `None` if the curve
/// starts below the level or never crosses it.
pub fn snl_crossing(axis: &[f64], values: &[f64], level: f64) -> Option<f64> {
    if axis.len() != values.len() || values.first().map_or(true, |&v| v < level) {
        return None;
    }
    axis.windows(2).zip(values.windows(2)).find_map(|(x, y)| {
        (y[0] >= level && y[1] < level).then(|| x[0] + (y[0] - level) * (x[1] - x[0]) / (y[0] - y[1]))
    })
}
