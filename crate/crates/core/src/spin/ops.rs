use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::{unit_vector, Operator, OperatorKind, Rotator, SpinSystem};
use crate::error::Result;

/// The Cartesian collective-spin operators of one system, plus the cached
/// rotation machinery built from them.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    system: SpinSystem,
    sx: Operator,
    sy: Operator,
    sz: Operator,
    rotator: Rotator,
}

/// Builds `(S_x, S_y, S_z)` with `[S_i, S_j] = i eps_ijk S_k`.
pub fn build_spin_operators(system: SpinSystem) -> Result<SpinOperators> {
    let d = system.dim();
    let s = system.spin();
    let raising = DMatrix::<C64>::from_fn(d, d, |row, col| {
        if col >= 1 && row == col - 1 {
            let m = system.m_value(col);
            C64::new((s * (s + 1.0) - m * (m + 1.0)).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let lowering = raising.adjoint();
    let sx = (&raising + &lowering) * C64::new(0.5, 0.0);
    // (S+ - S-) / 2i
    let sy = (&raising - &lowering) * C64::new(0.0, -0.5);
    let sz = DMatrix::<C64>::from_fn(d, d, |r, c| {
        if r == c {
            C64::new(system.m_value(r), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let rotator = Rotator::new(system, &sx);
    Ok(SpinOperators {
        system,
        sx: Operator::hermitian(system, sx)?,
        sy: Operator::hermitian(system, sy)?,
        sz: Operator::hermitian(system, sz)?,
        rotator,
    })
}

impl SpinOperators {
    pub fn new(system: SpinSystem) -> Result<Self> {
        build_spin_operators(system)
    }

    pub fn system(&self) -> SpinSystem {
        self.system
    }

    pub fn sx(&self) -> &Operator {
        &self.sx
    }

    pub fn sy(&self) -> &Operator {
        &self.sy
    }

    pub fn sz(&self) -> &Operator {
        &self.sz
    }

    pub fn components(&self) -> [&Operator; 3] {
        [&self.sx, &self.sy, &self.sz]
    }

    pub fn rotator(&self) -> &Rotator {
        &self.rotator
    }

    /// `S_n = n_x S_x + n_y S_y + n_z S_z` for a unit vector `n`.
    pub fn spin_direction(&self, n: [f64; 3]) -> Result<Operator> {
        let n = unit_vector(n)?;
        Ok(self.spin_component(n))
    }

    pub(crate) fn spin_component(&self, n: [f64; 3]) -> Operator {
        let m = self.sx.matrix() * C64::new(n[0], 0.0)
            + self.sy.matrix() * C64::new(n[1], 0.0)
            + self.sz.matrix() * C64::new(n[2], 0.0);
        Operator::from_parts_unchecked(self.system, m, OperatorKind::Hermitian)
    }

    /// `(<S_x>, <S_y>, <S_z>)` for an arbitrary amplitude vector.
    pub(crate) fn mean_vector(&self, psi: &nalgebra::DVector<C64>) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (o, op) in out.iter_mut().zip(self.components()) {
            *o = psi.dotc(&(op.matrix() * psi)).re;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::max_abs;

    fn ops(n: usize) -> SpinOperators {
        build_spin_operators(SpinSystem::new(n).unwrap()).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn n2_sz_and_ladder() {
        let o = ops(2);
        let sz = o.sz().matrix();
        assert_eq!(sz[(0, 0)], c(1.0, 0.0));
        assert_eq!(sz[(1, 1)], c(0.0, 0.0));
        assert_eq!(sz[(2, 2)], c(-1.0, 0.0));
        // S+ = S_x + i S_y
        let sp = o.sx().matrix() + o.sy().matrix() * c(0.0, 1.0);
        let nonzero: Vec<C64> = sp.iter().copied().filter(|z| z.norm() > 1e-15).collect();
        assert_eq!(nonzero.len(), 2);
        for z in nonzero {
            assert!((z - c(2f64.sqrt(), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn n1_is_half_pauli() {
        let o = ops(1);
        let half = 0.5;
        let px = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(half, 0.0), c(half, 0.0), c(0.0, 0.0)]);
        let py = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -half), c(0.0, half), c(0.0, 0.0)]);
        let pz = DMatrix::from_row_slice(2, 2, &[c(half, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-half, 0.0)]);
        assert!(max_abs(&(o.sx().matrix() - px)) < 1e-15);
        assert!(max_abs(&(o.sy().matrix() - py)) < 1e-15);
        assert!(max_abs(&(o.sz().matrix() - pz)) < 1e-15);
    }

    #[test]
    fn spin_direction_examples() {
        let o = ops(2);
        assert_eq!(o.spin_direction([1.0, 0.0, 0.0]).unwrap().matrix(), o.sx().matrix());
        let sz = o.spin_direction([0.0, 0.0, 1.0]).unwrap();
        assert!(sz.max_abs_diff(o.sz()) == 0.0);
        let (a, b) = (0.6, 0.8);
        let sn = o.spin_direction([0.0, a, b]).unwrap();
        let want = o.sy().matrix() * c(a, 0.0) + o.sz().matrix() * c(b, 0.0);
        assert!(max_abs(&(sn.matrix() - want)) < 1e-15);
        assert!(o.spin_direction([0.0, 1.0, 1.0]).is_err());
    }
}
