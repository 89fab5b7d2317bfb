//! Hamiltonians, exact propagators and assembly of `U_2 U_phi U_1 |psi_0>`.
//!
//! Times are measured in units of `1/chi` (`chi = 1`), so every time here is the
//! dimensionless `chi t`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{
    spectral_decomposition, unit_vector, BasisSpec, EulerZyz, Operator, OperatorKind,
    SpinOperators, SpinSystem, StateVector,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HamiltonianKind {
    /// `S_z^2 - J S_x` with `Lambda = N / J`.
    Tnt { lambda: f64 },
    /// `S_z^2`.
    Oat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub system: SpinSystem,
    pub kind: HamiltonianKind,
}

impl HamiltonianSpec {
    pub fn tnt(system: SpinSystem, lambda: f64) -> Result<Self> {
        let spec = Self { system, kind: HamiltonianKind::Tnt { lambda } };
        spec.validate()?;
        Ok(spec)
    }

    pub fn oat(system: SpinSystem) -> Self {
        Self { system, kind: HamiltonianKind::Oat }
    }

    pub fn validate(&self) -> Result<()> {
        if let HamiltonianKind::Tnt { lambda } = self.kind {
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(Error::InvalidLambda(lambda));
            }
        }
        Ok(())
    }

    /// Linear coupling `J = N chi / Lambda`; zero for one-axis twisting.
    pub fn j_coupling(&self) -> f64 {
        match self.kind {
            HamiltonianKind::Tnt { lambda } => self.system.n_atoms() as f64 / lambda,
            HamiltonianKind::Oat => 0.0,
        }
    }
}

pub fn build_hamiltonian(ops: &SpinOperators, spec: &HamiltonianSpec) -> Result<Operator> {
    spec.validate()?;
    if spec.system != ops.system() {
        return Err(Error::DimensionMismatch {
            expected: ops.system().dim(),
            found: spec.system.dim(),
        });
    }
    let sz = ops.sz().matrix();
    let h = sz * sz - ops.sx().matrix() * C64::new(spec.j_coupling(), 0.0);
    Operator::hermitian(ops.system(), h)
}

/// Cached spectral decomposition of a Hamiltonian, `H = V diag(E) V^dagger`.
#[derive(Clone, Debug)]
pub struct Evolution {
    system: SpinSystem,
    energies: Vec<f64>,
    vectors: DMatrix<C64>,
    vectors_adj: DMatrix<C64>,
}

impl Evolution {
    pub fn new(h: &Operator) -> Result<Self> {
        if h.kind() != OperatorKind::Hermitian {
            return Err(Error::NotHermitian { residual: f64::NAN });
        }
        let (energies, vectors) = spectral_decomposition(h.matrix());
        let vectors_adj = vectors.adjoint();
        Ok(Self { system: h.system(), energies, vectors, vectors_adj })
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `exp(-i t H) v`.
    pub fn evolve(&self, v: &DVector<C64>, t: f64) -> DVector<C64> {
        if t == 0.0 {
            return v.clone();
        }
        let mut w = &self.vectors_adj * v;
        for (c, &e) in w.iter_mut().zip(&self.energies) {
            *c *= C64::from_polar(1.0, -t * e);
        }
        &self.vectors * w
    }

    /// `exp(-i t H)` as a unitary operator.
    pub fn propagator(&self, t: f64) -> Operator {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, -t * self.energies[k]);
        }
        Operator::from_parts_unchecked(self.system, scaled * &self.vectors_adj, OperatorKind::Unitary)
    }
}

/// `exp(-i t H)` by spectral decomposition.
pub fn propagator(h: &Operator, t: f64) -> Result<Operator> {
    Ok(Evolution::new(h)?.propagator(t))
}

/// Interaction-based readout `U_2` applied after phase encoding.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Readout {
    /// `U_2 = 1`.
    None,
    /// `U_2 = U_1^dagger(t_1)`.
    Echo,
    /// `U_2 = U_1^dagger(t_2)`.
    AsymmetricEcho { t2: f64 },
    /// `U_2 = U_1(t_2)`, same sign of the interaction.
    PseudoEcho { t2: f64 },
    /// `U_2 = exp(-i angle a.S)`, a linear rotation about `axis`.
    Rotation { axis: [f64; 3], angle: f64 },
}

impl Readout {
    pub fn label(&self) -> &'static str {
        match self {
            Readout::None => "none",
            Readout::Echo => "echo",
            Readout::AsymmetricEcho { .. } => "asymmetric_echo",
            Readout::PseudoEcho { .. } => "pseudo_echo",
            Readout::Rotation { .. } => "rotation",
        }
    }

    /// Signed evolution time of `U_2` under the preparation Hamiltonian, if any.
    fn evolution_time(&self, t1: f64) -> Option<f64> {
        match *self {
            Readout::None | Readout::Rotation { .. } => None,
            Readout::Echo => Some(-t1),
            Readout::AsymmetricEcho { t2 } => Some(-t2),
            Readout::PseudoEcho { t2 } => Some(t2),
        }
    }
}

/// One run of the protocol `|psi> = U_2 U_phi U_1 |psi_0>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub hamiltonian: HamiltonianSpec,
    /// State-preparation time `chi t_1`.
    pub t1: f64,
    pub readout: Readout,
    /// Encoded phase; `U_phi = exp(-i phi S_n)`.
    pub phi: f64,
    /// Unit vector `n` of the phase generator `S_n`.
    pub generator_dir: [f64; 3],
    pub measurement: BasisSpec,
}

impl ProtocolSpec {
    pub fn validate(&self) -> Result<()> {
        self.hamiltonian.validate()?;
        check_time("t1", self.t1)?;
        match self.readout {
            Readout::AsymmetricEcho { t2 } | Readout::PseudoEcho { t2 } => check_time("t2", t2)?,
            Readout::Rotation { axis, angle } => {
                unit_vector(axis)?;
                if !angle.is_finite() {
                    return Err(Error::InvalidParameter("rotation angle must be finite".into()));
                }
            }
            Readout::None | Readout::Echo => {}
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidParameter("phi must be finite".into()));
        }
        unit_vector(self.generator_dir)?;
        Ok(())
    }

    pub fn system(&self) -> SpinSystem {
        self.hamiltonian.system
    }
}

fn check_time(name: &str, t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Final state and its phase derivative, `(|psi>, d|psi>/d phi)`.
#[derive(Clone, Debug)]
pub struct PhaseSignal {
    pub psi: DVector<C64>,
    pub dpsi: DVector<C64>,
}

/// Spin operators together with a diagonalized preparation Hamiltonian, for
/// repeated protocol evaluation.
#[derive(Clone, Debug)]
pub struct Simulator {
    ops: SpinOperators,
    hamiltonian: HamiltonianSpec,
    h: Operator,
    evolution: Evolution,
}

impl Simulator {
    pub fn new(ops: SpinOperators, hamiltonian: HamiltonianSpec) -> Result<Self> {
        let h = build_hamiltonian(&ops, &hamiltonian)?;
        let evolution = Evolution::new(&h)?;
        Ok(Self { ops, hamiltonian, h, evolution })
    }

    pub fn tnt(n_atoms: usize, lambda: f64) -> Result<Self> {
        let system = SpinSystem::new(n_atoms)?;
        Self::new(SpinOperators::new(system)?, HamiltonianSpec::tnt(system, lambda)?)
    }

    pub fn oat(n_atoms: usize) -> Result<Self> {
        let system = SpinSystem::new(n_atoms)?;
        Self::new(SpinOperators::new(system)?, HamiltonianSpec::oat(system))
    }

    pub fn ops(&self) -> &SpinOperators {
        &self.ops
    }

    pub fn system(&self) -> SpinSystem {
        self.ops.system()
    }

    pub fn hamiltonian_spec(&self) -> &HamiltonianSpec {
        &self.hamiltonian
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.h
    }

    pub fn evolution(&self) -> &Evolution {
        &self.evolution
    }

    /// Probe state of the protocols: the lowest `S_x` eigenstate.
    pub fn initial_state(&self) -> Result<StateVector> {
        crate::spin::min_eigenstate(self.ops.sx())
    }

    /// `U_1(t) |psi_0>`.
    pub fn prepare(&self, psi0: &StateVector, t1: f64) -> Result<StateVector> {
        check_time("t1", t1)?;
        self.check_state(psi0)?;
        StateVector::from_unnormalized(self.system(), self.evolution.evolve(psi0.amplitudes(), t1))
    }

    /// `exp(-i phi S_n) v`.
    pub fn encode_phase(&self, n: [f64; 3], phi: f64, v: &DVector<C64>) -> Result<DVector<C64>> {
        let frame = EulerZyz::z_onto(n)?;
        let rot = self.ops.rotator();
        let mut w = rot.apply_inverse(&frame, v);
        rot.z_phase(phi, &mut w);
        Ok(rot.apply(&frame, &w))
    }

    /// `U_2 v` for a readout following preparation time `t1`.
    pub fn apply_readout(&self, readout: &Readout, t1: f64, v: &DVector<C64>) -> Result<DVector<C64>> {
        if let Some(t) = readout.evolution_time(t1) {
            return Ok(self.evolution.evolve(v, t));
        }
        match *readout {
            Readout::Rotation { axis, angle } => {
                let r = EulerZyz::from_axis_angle(axis, angle)?;
                Ok(self.ops.rotator().apply(&r, v))
            }
            _ => Ok(v.clone()),
        }
    }

    /// `U_2` as a dense unitary.
    pub fn readout_operator(&self, readout: &Readout, t1: f64) -> Result<Operator> {
        if let Some(t) = readout.evolution_time(t1) {
            return Ok(self.evolution.propagator(t));
        }
        match *readout {
            Readout::Rotation { axis, angle } => {
                let r = EulerZyz::from_axis_angle(axis, angle)?;
                Ok(Operator::from_parts_unchecked(
                    self.system(),
                    self.ops.rotator().matrix(&r),
                    OperatorKind::Unitary,
                ))
            }
            _ => Ok(Operator::identity(self.system())),
        }
    }

    /// Final state and phase derivative for `spec` evaluated at phase `phi`.
    pub fn signal_at(&self, spec: &ProtocolSpec, psi0: &StateVector, phi: f64) -> Result<PhaseSignal> {
        spec.validate()?;
        self.check_spec(spec)?;
        let prepared = self.prepare(psi0, spec.t1)?;
        self.signal_from_prepared(spec, prepared.amplitudes(), phi)
    }

    pub(crate) fn signal_from_prepared(
        &self,
        spec: &ProtocolSpec,
        prepared: &DVector<C64>,
        phi: f64,
    ) -> Result<PhaseSignal> {
        let encoded = self.encode_phase(spec.generator_dir, phi, prepared)?;
        // d/dphi exp(-i phi S_n) = -i S_n exp(-i phi S_n)
        let sn = self.ops.spin_component(spec.generator_dir);
        let slope = (sn.matrix() * &encoded) * C64::new(0.0, -1.0);
        let psi = self.apply_readout(&spec.readout, spec.t1, &encoded)?;
        let dpsi = self.apply_readout(&spec.readout, spec.t1, &slope)?;
        Ok(PhaseSignal { psi, dpsi })
    }

    /// `U_2 U_phi U_1 |psi_0>` at the phase stored in `spec`.
    pub fn run(&self, spec: &ProtocolSpec, psi0: &StateVector) -> Result<StateVector> {
        let sig = self.signal_at(spec, psi0, spec.phi)?;
        StateVector::from_unnormalized(self.system(), sig.psi)
    }

    fn check_state(&self, psi: &StateVector) -> Result<()> {
        if psi.system() != self.system() {
            return Err(Error::DimensionMismatch {
                expected: self.system().dim(),
                found: psi.system().dim(),
            });
        }
        Ok(())
    }

    fn check_spec(&self, spec: &ProtocolSpec) -> Result<()> {
        if spec.hamiltonian != self.hamiltonian {
            return Err(Error::InvalidParameter(
                "protocol Hamiltonian differs from the simulator's".into(),
            ));
        }
        Ok(())
    }
}

/// `U_2 U_phi U_1 |psi_0>`, built from scratch.
pub fn run_protocol(ops: &SpinOperators, spec: &ProtocolSpec, psi0: &StateVector) -> Result<StateVector> {
    let sim = Simulator::new(ops.clone(), spec.hamiltonian)?;
    sim.run(spec, psi0)
}

/// `(<S_x>, <S_y>, <S_z>)`.
pub fn mean_spin(ops: &SpinOperators, psi: &StateVector) -> [f64; 3] {
    ops.mean_vector(psi.amplitudes())
}
