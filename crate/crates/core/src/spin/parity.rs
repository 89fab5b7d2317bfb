use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{max_abs, BasisSpec, Operator, OperatorKind, SpinOperators, StateVector};
use crate::error::{Error, Result};

pub const PARITY_TOLERANCE: f64 = 1e-9;

/// `sum_k (-1)^k |b_k><b_k|` over the columns of the measurement basis.
pub fn parity_operator(ops: &SpinOperators, basis: &BasisSpec) -> Result<Operator> {
    let u = basis.unitary(ops)?;
    let v = u.matrix();
    let mut signed = v.clone();
    for (k, mut col) in signed.column_iter_mut().enumerate() {
        if k % 2 == 1 {
            col.neg_mut();
        }
    }
    let m: DMatrix<C64> = signed * v.adjoint();
    // exactly Hermitian by construction, symmetrize away rounding
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    Ok(Operator::from_parts_unchecked(ops.system(), m, OperatorKind::Hermitian))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub holds: bool,
    pub residual: f64,
}

impl ConditionCheck {
    fn new(residual: f64) -> Self {
        Self { holds: residual <= PARITY_TOLERANCE, residual }
    }
}

/// Outcome of the three sufficient conditions for a readout to saturate the
/// quantum Cramer-Rao bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    /// The probe state is a parity eigenstate in the measurement basis.
    pub state_parity: ConditionCheck,
    /// `0` for even, `1` for odd; meaningful only when `state_parity.holds`.
    pub parity: u8,
    /// `Pi S_n Pi = -S_n`.
    pub generator_flip: ConditionCheck,
    /// `[U_2, Pi] = 0`.
    pub readout_commutes: ConditionCheck,
}

impl ParityReport {
    pub fn all_hold(&self) -> bool {
        self.state_parity.holds && self.generator_flip.holds && self.readout_commutes.holds
    }
}

/// Checks the parity conditions for `state` (the prepared probe before phase
/// encoding), phase generator, readout unitary and measurement basis.
pub fn check_parity_conditions(
    ops: &SpinOperators,
    state: &StateVector,
    generator: &Operator,
    readout: &Operator,
    basis: &BasisSpec,
) -> Result<ParityReport> {
    let system = ops.system();
    for found in [state.system(), generator.system(), readout.system()] {
        if found != system {
            return Err(Error::DimensionMismatch { expected: system.dim(), found: found.dim() });
        }
    }
    let pi = parity_operator(ops, basis)?;
    let p = pi.matrix();
    let psi = state.amplitudes();
    let image = p * psi;
    let even = (&image - psi).norm();
    let odd = (&image + psi).norm();
    let (residual1, parity) = if even <= odd { (even, 0) } else { (odd, 1) };

    let g = generator.matrix();
    let residual2 = max_abs(&(p * g * p + g));

    let u = readout.matrix();
    let residual3 = max_abs(&(u * p - p * u));

    Ok(ParityReport {
        state_parity: ConditionCheck::new(residual1),
        parity,
        generator_flip: ConditionCheck::new(residual2),
        readout_commutes: ConditionCheck::new(residual3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{min_eigenstate, spectral_decomposition, SpinSystem};

    fn ops(n: usize) -> SpinOperators {
        SpinOperators::new(SpinSystem::new(n).unwrap()).unwrap()
    }

    fn expm(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
        let (vals, v) = spectral_decomposition(h);
        let mut s = v.clone();
        for (k, mut col) in s.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, -t * vals[k]);
        }
        s * v.adjoint()
    }

    #[test]
    fn sz_parity_n2() {
        let o = ops(2);
        let pi = parity_operator(&o, &BasisSpec::Sz).unwrap();
        let want = [1.0, -1.0, 1.0];
        for r in 0..3 {
            for c in 0..3 {
                let w = if r == c { want[r] } else { 0.0 };
                assert!((pi.matrix()[(r, c)] - C64::new(w, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn parity_squares_to_identity() {
        for n in [1, 4, 7] {
            let o = ops(n);
            for b in [BasisSpec::Sx, BasisSpec::Sz, BasisSpec::Rotated { axis: [0.6, 0.0, 0.8], angle: 0.9 }] {
                let p = parity_operator(&o, &b).unwrap();
                let sq = p.matrix() * p.matrix();
                assert!(max_abs(&(sq - DMatrix::<C64>::identity(n + 1, n + 1))) < 1e-10);
            }
        }
    }

    #[test]
    fn sx_parity_flips_transverse_components() {
        let o = ops(10);
        let p = parity_operator(&o, &BasisSpec::Sx).unwrap();
        let pm = p.matrix();
        assert!(max_abs(&(pm * o.sx().matrix() * pm - o.sx().matrix())) < 1e-10);
        assert!(max_abs(&(pm * o.sy().matrix() * pm + o.sy().matrix())) < 1e-10);
        assert!(max_abs(&(pm * o.sz().matrix() * pm + o.sz().matrix())) < 1e-10);
    }

    #[test]
    fn coherent_probe_conditions() {
        let o = ops(4);
        let psi0 = min_eigenstate(o.sx()).unwrap();
        let sn = o.spin_direction([0.0, 0.6, 0.8]).unwrap();
        let id = Operator::identity(o.system());
        let r = check_parity_conditions(&o, &psi0, &sn, &id, &BasisSpec::Sx).unwrap();
        assert!(r.all_hold(), "{r:?}");
        // S_x = -2 sits at index k = 4, even
        assert_eq!(r.parity, 0);
    }

    #[test]
    fn y_rotation_readout_breaks_condition_three() {
        // [exp(-i theta S_y), Pi_x] at N = 4: nonzero away from theta in {0, pi}
        let o = ops(4);
        let psi0 = min_eigenstate(o.sx()).unwrap();
        let sn = o.spin_direction([0.0, 0.0, 1.0]).unwrap();
        for theta in [0.3, 1.0, 2.0] {
            let u2 = Operator::unitary(o.system(), expm(o.sy().matrix(), theta)).unwrap();
            let r = check_parity_conditions(&o, &psi0, &sn, &u2, &BasisSpec::Sx).unwrap();
            assert!(!r.readout_commutes.holds);
            assert!(r.readout_commutes.residual > 1e-3);
        }
        let u2 = Operator::unitary(o.system(), expm(o.sy().matrix(), std::f64::consts::PI)).unwrap();
        let r = check_parity_conditions(&o, &psi0, &sn, &u2, &BasisSpec::Sx).unwrap();
        assert!(r.readout_commutes.holds);
    }
}
