use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{PhaseSignal, ProtocolSpec, Simulator};
use crate::error::{Error, Result};
use crate::metrology::{check_dropped, fisher_from_amplitudes, NoiseKernel, NoiseModel};
use crate::spin::{cross3, dot3, norm3, normalize3, unit_vector, BasisSpec, EulerZyz, SpinOperators, StateVector};

/// Values this close to the running maximum count as ties.
const TIE_TOLERANCE: f64 = 1e-12;
const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisSearchSpec {
    /// Coarse angles per plane, spread over `[0, 2 pi)`.
    pub grid: usize,
    /// Golden-section iterations around the best coarse angle.
    pub refine: usize,
    /// Bracket width (rad) at which refinement stops early.
    pub tolerance: f64,
}

impl Default for BasisSearchSpec {
    fn default() -> Self {
        Self { grid: 64, refine: 40, tolerance: 1e-6 }
    }
}

impl BasisSearchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 8 {
            return Err(Error::InvalidParameter(format!("basis search grid must be >= 8, got {}", self.grid)));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("basis search tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchPlane {
    /// Directions perpendicular to `x`; angle 0 points along the part of the
    /// generator perpendicular to `x`.
    NormalToSx,
    /// Directions perpendicular to the generator `n`; angle 0 points along
    /// the part of `x` perpendicular to `n`.
    NormalToSn,
}

impl SearchPlane {
    pub const ALL: [SearchPlane; 2] = [SearchPlane::NormalToSx, SearchPlane::NormalToSn];

    pub fn label(&self) -> &'static str {
        match self {
            SearchPlane::NormalToSx => "normal_to_sx",
            SearchPlane::NormalToSn => "normal_to_sn",
        }
    }

    /// Orthonormal `(a, b)` spanning the plane; directions are `cos t a + sin t b`.
    pub fn frame(&self, generator: [f64; 3]) -> Result<([f64; 3], [f64; 3])> {
        let n = unit_vector(generator)?;
        let x = [1.0, 0.0, 0.0];
        let (normal, seed, fallback) = match self {
            SearchPlane::NormalToSx => (x, n, [0.0, 1.0, 0.0]),
            SearchPlane::NormalToSn => (n, x, [0.0, 0.0, 1.0]),
        };
        let along = dot3(seed, normal);
        let mut a = [seed[0] - along * normal[0], seed[1] - along * normal[1], seed[2] - along * normal[2]];
        if norm3(a) < 1e-9 {
            // generator parallel to x: both planes are the y-z plane
            a = fallback;
        }
        let a = normalize3(a);
        Ok((a, cross3(normal, a)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneOptimum {
    pub plane: SearchPlane,
    pub angle: f64,
    pub direction: [f64; 3],
    pub basis: BasisSpec,
    pub fc: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisOptimum {
    pub best: PlaneOptimum,
    pub planes: [PlaneOptimum; 2],
}

/// Precomputed pieces for scanning measurement directions in one plane.
///
/// The basis for angle `t` is `D_p(t) D_a`, where `D_a` takes `z` to `a` and
/// `D_p(t) = F exp(-i t S_z) F^dagger` rotates about the plane normal `p`
/// (`F` takes `z` to `p`). Outcome amplitudes are therefore
/// `(D_a^dagger F) exp(i t S_z) (F^dagger psi)`, one matrix-vector product per
/// angle once `M = D_a^dagger F` and `u = F^dagger psi` are known.
#[derive(Clone, Debug)]
struct PlaneScan {
    plane: SearchPlane,
    a: [f64; 3],
    b: [f64; 3],
    m: Vec<f64>,
    mix: DMatrix<C64>,
    u: DVector<C64>,
    du: DVector<C64>,
}

impl PlaneScan {
    fn new(ops: &SpinOperators, plane: SearchPlane, generator: [f64; 3], signal: &PhaseSignal) -> Result<Self> {
        let (a, b) = plane.frame(generator)?;
        let p = cross3(a, b);
        let rot = ops.rotator();
        let frame = EulerZyz::z_onto(p)?;
        let f = rot.matrix(&frame);
        let da = rot.matrix(&EulerZyz::z_onto(a)?);
        let mix = da.adjoint() * &f;
        let f_adj = f.adjoint();
        Ok(Self {
            plane,
            a,
            b,
            m: ops.system().m_values(),
            mix,
            u: &f_adj * &signal.psi,
            du: &f_adj * &signal.dpsi,
        })
    }

    fn direction(&self, angle: f64) -> [f64; 3] {
        let (s, c) = angle.sin_cos();
        [c * self.a[0] + s * self.b[0], c * self.a[1] + s * self.b[1], c * self.a[2] + s * self.b[2]]
    }

    fn amplitudes(&self, angle: f64) -> (DVector<C64>, DVector<C64>) {
        let phases: Vec<C64> = self.m.iter().map(|&m| C64::from_polar(1.0, angle * m)).collect();
        let u = DVector::from_iterator(self.u.len(), self.u.iter().zip(&phases).map(|(z, w)| z * w));
        let du = DVector::from_iterator(self.du.len(), self.du.iter().zip(&phases).map(|(z, w)| z * w));
        (&self.mix * u, &self.mix * du)
    }

    fn fisher(&self, angle: f64, kernel: &NoiseKernel) -> (f64, f64) {
        let (a, da) = self.amplitudes(angle);
        fisher_from_amplitudes(&a, &da, kernel)
    }

    fn optimize(&self, kernel: &NoiseKernel, search: &BasisSearchSpec, n_atoms: usize) -> Result<PlaneOptimum> {
        let step = TAU / search.grid as f64;
        let values: Vec<f64> = (0..search.grid).map(|i| self.fisher(i as f64 * step, kernel).0).collect();
        let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let first = values.iter().position(|&v| v >= top - TIE_TOLERANCE * top.abs()).unwrap_or(0);
        let mut angle = first as f64 * step;
        let mut value = values[first];

        let (mut lo, mut hi) = (angle - step, angle + step);
        let mut x1 = hi - INV_GOLDEN * (hi - lo);
        let mut x2 = lo + INV_GOLDEN * (hi - lo);
        let mut f1 = self.fisher(x1, kernel).0;
        let mut f2 = self.fisher(x2, kernel).0;
        for _ in 0..search.refine {
            if hi - lo < search.tolerance {
                break;
            }
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_GOLDEN * (hi - lo);
                f1 = self.fisher(x1, kernel).0;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_GOLDEN * (hi - lo);
                f2 = self.fisher(x2, kernel).0;
            }
        }
        let (cand, cand_value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if cand_value > value * (1.0 + TIE_TOLERANCE) {
            angle = cand.rem_euclid(TAU);
            value = cand_value;
        }
        let (checked, bound) = self.fisher(angle, kernel);
        check_dropped(checked, bound, n_atoms)?;
        let direction = self.direction(angle);
        Ok(PlaneOptimum { plane: self.plane, angle, direction, basis: BasisSpec::along(direction)?, fc: value })
    }
}

/// Basis searches over both planes for one phase signal; reusable across
/// noise levels.
#[derive(Clone, Debug)]
pub(crate) struct SignalSearch {
    scans: [PlaneScan; 2],
    n_atoms: usize,
}

impl SignalSearch {
    pub(crate) fn new(ops: &SpinOperators, generator: [f64; 3], signal: &PhaseSignal) -> Result<Self> {
        Ok(Self {
            scans: [
                PlaneScan::new(ops, SearchPlane::NormalToSx, generator, signal)?,
                PlaneScan::new(ops, SearchPlane::NormalToSn, generator, signal)?,
            ],
            n_atoms: ops.system().n_atoms(),
        })
    }

    pub(crate) fn optimize(&self, kernel: &NoiseKernel, search: &BasisSearchSpec) -> Result<BasisOptimum> {
        search.validate()?;
        let first = self.scans[0].optimize(kernel, search, self.n_atoms)?;
        let second = self.scans[1].optimize(kernel, search, self.n_atoms)?;
        let best = if second.fc > first.fc * (1.0 + TIE_TOLERANCE) { second } else { first };
        Ok(BasisOptimum { best, planes: [first, second] })
    }
}

/// Best measurement direction for `spec` under `noise`, searched in the
/// planes normal to `x` and to the generator `spec.generator_dir`. The phase
/// is evaluated at `spec.phi`; `spec.measurement` is ignored.
pub fn optimize_basis(
    sim: &Simulator,
    spec: &ProtocolSpec,
    psi0: &StateVector,
    noise: NoiseModel,
    search: &BasisSearchSpec,
) -> Result<BasisOptimum> {
    search.validate()?;
    let signal = sim.signal_at(spec, psi0, spec.phi)?;
    let kernel = NoiseKernel::new(sim.system().dim(), noise);
    SignalSearch::new(sim.ops(), spec.generator_dir, &signal)?.optimize(&kernel, search)
}
