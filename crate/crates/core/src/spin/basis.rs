use serde::{Deserialize, Serialize};

use super::{cross3, eigenbasis, norm3, unit_vector, EulerZyz, Operator, OperatorKind, SpinOperators};
use crate::error::Result;

/// A complete orthonormal measurement basis.
///
/// `Rotated` applies the rotation `(axis, angle)` to the `S_z` eigenbasis, so it
/// measures the spin component along `R z`. Columns keep the descending-`m`
/// ordering of the reference basis, which is what outcome labels and the
/// parity sign `(-1)^k` refer to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "label", rename_all = "snake_case")]
pub enum BasisSpec {
    Sx,
    Sz,
    Rotated { axis: [f64; 3], angle: f64 },
}

impl BasisSpec {
    /// Basis resolving the spin component along the unit vector `direction`.
    pub fn along(direction: [f64; 3]) -> Result<Self> {
        let d = unit_vector(direction)?;
        let axis = cross3([0.0, 0.0, 1.0], d);
        let n = norm3(axis);
        if n < 1e-14 {
            return Ok(if d[2] > 0.0 {
                BasisSpec::Sz
            } else {
                BasisSpec::Rotated { axis: [1.0, 0.0, 0.0], angle: std::f64::consts::PI }
            });
        }
        let angle = n.atan2(d[2]);
        Ok(BasisSpec::Rotated { axis: [axis[0] / n, axis[1] / n, axis[2] / n], angle })
    }

    pub fn label(&self) -> &'static str {
        match self {
            BasisSpec::Sx => "sx",
            BasisSpec::Sz => "sz",
            BasisSpec::Rotated { .. } => "rotated",
        }
    }

    /// Unit vector of the spin component this basis resolves.
    pub fn direction(&self) -> Result<[f64; 3]> {
        Ok(match self {
            BasisSpec::Sx => [1.0, 0.0, 0.0],
            BasisSpec::Sz => [0.0, 0.0, 1.0],
            BasisSpec::Rotated { axis, angle } => {
                EulerZyz::from_axis_angle(*axis, *angle)?.rotate([0.0, 0.0, 1.0])
            }
        })
    }

    /// Unitary whose `k`-th column is the basis vector carrying outcome `m = s - k`.
    pub fn unitary(&self, ops: &SpinOperators) -> Result<Operator> {
        match self {
            BasisSpec::Sz => Ok(Operator::identity(ops.system())),
            BasisSpec::Sx => Ok(eigenbasis(ops.sx())?.vectors),
            BasisSpec::Rotated { axis, angle } => {
                let r = EulerZyz::from_axis_angle(*axis, *angle)?;
                Ok(Operator::from_parts_unchecked(
                    ops.system(),
                    ops.rotator().matrix(&r),
                    OperatorKind::Unitary,
                ))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{max_abs, SpinSystem};
    use nalgebra::DMatrix;
    use num_complex::Complex64 as C64;

    #[test]
    fn rotated_columns_orthonormal_and_ordered() {
        let ops = SpinOperators::new(SpinSystem::new(8).unwrap()).unwrap();
        let b = BasisSpec::Rotated { axis: [0.0, 0.6, 0.8], angle: 1.1 };
        let u = b.unitary(&ops).unwrap();
        let m = u.matrix();
        assert!(max_abs(&(m.adjoint() * m - DMatrix::<C64>::identity(9, 9))) < 1e-10);
        let sd = ops.spin_direction(b.direction().unwrap()).unwrap();
        for k in 0..9 {
            let col = m.column(k);
            let want = col * C64::new(ops.system().m_value(k), 0.0);
            assert!((sd.matrix() * col - want).norm() < 1e-10);
        }
    }

    #[test]
    fn along_recovers_direction() {
        for d in [[1.0, 0.0, 0.0], [0.0, 0.6, -0.8], [0.0, 0.0, 1.0], [0.0, 0.0, -1.0]] {
            let got = BasisSpec::along(d).unwrap().direction().unwrap();
            for i in 0..3 {
                assert!((got[i] - d[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sx_basis_diagonalizes_sx() {
        let ops = SpinOperators::new(SpinSystem::new(5).unwrap()).unwrap();
        let u = BasisSpec::Sx.unitary(&ops).unwrap();
        let diag = u.matrix().adjoint() * ops.sx().matrix() * u.matrix();
        for k in 0..6 {
            assert!((diag[(k, k)].re - ops.system().m_value(k)).abs() < 1e-12);
        }
    }
}
