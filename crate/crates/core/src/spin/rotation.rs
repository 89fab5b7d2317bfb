use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{norm3, unit_vector, SpinSystem};
use crate::error::Result;

/// Spatial rotation `R_z(alpha) R_y(beta) R_z(gamma)` in z-y-z Euler angles.
///
/// On the spin it acts as `D = exp(-i alpha S_z) exp(-i beta S_y) exp(-i gamma S_z)`,
/// which satisfies `D S_k D^dagger = sum_j R_jk S_j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerZyz {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerZyz {
    pub const IDENTITY: EulerZyz = EulerZyz { alpha: 0.0, beta: 0.0, gamma: 0.0 };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Right-handed rotation by `angle` about the unit vector `axis`.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Result<Self> {
        let [x, y, z] = unit_vector(axis)?;
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        let r = [
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ];
        Ok(Self::from_matrix(&r))
    }

    /// Rotation carrying `+z` onto the unit vector `d` (no twist about `d`).
    pub fn z_onto(d: [f64; 3]) -> Result<Self> {
        let d = unit_vector(d)?;
        let beta = d[2].clamp(-1.0, 1.0).acos();
        let alpha = if d[0].hypot(d[1]) < 1e-15 { 0.0 } else { d[1].atan2(d[0]) };
        Ok(Self { alpha, beta, gamma: 0.0 })
    }

    pub fn from_matrix(r: &[[f64; 3]; 3]) -> Self {
        let beta = r[2][2].clamp(-1.0, 1.0).acos();
        let sin_beta = (r[0][2] * r[0][2] + r[1][2] * r[1][2]).sqrt();
        if sin_beta > 1e-12 {
            Self {
                alpha: r[1][2].atan2(r[0][2]),
                beta,
                gamma: r[2][1].atan2(-r[2][0]),
            }
        } else if r[2][2] > 0.0 {
            Self { alpha: r[1][0].atan2(r[0][0]), beta: 0.0, gamma: 0.0 }
        } else {
            Self { alpha: (-r[0][1]).atan2(r[1][1]), beta: std::f64::consts::PI, gamma: 0.0 }
        }
    }

    pub fn inverse(&self) -> Self {
        Self { alpha: -self.gamma, beta: -self.beta, gamma: -self.alpha }
    }

    /// The 3x3 rotation matrix, row-major.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let rz = |a: f64| {
            let (s, c) = a.sin_cos();
            [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
        };
        let (s, c) = self.beta.sin_cos();
        let ry = [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]];
        mat3_mul(&mat3_mul(&rz(self.alpha), &ry), &rz(self.gamma))
    }

    /// Image of a spatial vector under the rotation.
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        let r = self.matrix();
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = r[i][0] * v[0] + r[i][1] * v[1] + r[i][2] * v[2];
        }
        out
    }

    /// Axis and angle of the same rotation (angle in `[0, pi]`).
    pub fn axis_angle(&self) -> ([f64; 3], f64) {
        let r = self.matrix();
        let cos = ((r[0][0] + r[1][1] + r[2][2] - 1.0) / 2.0).clamp(-1.0, 1.0);
        let angle = cos.acos();
        let v = [r[2][1] - r[1][2], r[0][2] - r[2][0], r[1][0] - r[0][1]];
        let n = norm3(v);
        if n > 1e-9 {
            return ([v[0] / n, v[1] / n, v[2] / n], angle);
        }
        if angle < 1e-6 {
            return ([0.0, 0.0, 1.0], 0.0);
        }
        // angle ~ pi: axis from the symmetric part
        let mut axis = [
            ((r[0][0] + 1.0) / 2.0).max(0.0).sqrt(),
            ((r[1][1] + 1.0) / 2.0).max(0.0).sqrt(),
            ((r[2][2] + 1.0) / 2.0).max(0.0).sqrt(),
        ];
        let lead = (0..3).max_by(|&a, &b| axis[a].total_cmp(&axis[b])).unwrap_or(0);
        for i in 0..3 {
            if i != lead && r[lead][i] + r[i][lead] < 0.0 {
                axis[i] = -axis[i];
            }
        }
        let n = norm3(axis);
        ([axis[0] / n, axis[1] / n, axis[2] / n], angle)
    }
}

fn mat3_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Applies SU(2) rotations to Dicke-basis vectors.
///
/// Holds the eigendecomposition of `S_y`, obtained exactly from the real
/// tridiagonal `S_x` through `S_y = exp(-i pi/2 S_z) S_x exp(i pi/2 S_z)`.
#[derive(Clone, Debug)]
pub struct Rotator {
    m: Vec<f64>,
    y_values: Vec<f64>,
    y_vectors: DMatrix<C64>,
    y_vectors_adj: DMatrix<C64>,
}

impl Rotator {
    pub(crate) fn new(system: SpinSystem, sx: &DMatrix<C64>) -> Self {
        let m = system.m_values();
        let eig = sx.map(|z| z.re).symmetric_eigen();
        let d = system.dim();
        let y_vectors = DMatrix::<C64>::from_fn(d, d, |r, c| {
            C64::from_polar(1.0, -FRAC_PI_2 * m[r]) * eig.eigenvectors[(r, c)]
        });
        let y_vectors_adj = y_vectors.adjoint();
        Self { m, y_values: eig.eigenvalues.iter().copied().collect(), y_vectors, y_vectors_adj }
    }

    /// In place `v <- exp(-i angle S_z) v`.
    pub fn z_phase(&self, angle: f64, v: &mut DVector<C64>) {
        if angle == 0.0 {
            return;
        }
        for (c, &m) in v.iter_mut().zip(&self.m) {
            *c *= C64::from_polar(1.0, -angle * m);
        }
    }

    /// `exp(-i angle S_y) v`.
    pub fn y_rotate(&self, angle: f64, v: &DVector<C64>) -> DVector<C64> {
        if angle == 0.0 {
            return v.clone();
        }
        let mut w = &self.y_vectors_adj * v;
        for (c, &lam) in w.iter_mut().zip(&self.y_values) {
            *c *= C64::from_polar(1.0, -angle * lam);
        }
        &self.y_vectors * w
    }

    /// `D(R) v`.
    pub fn apply(&self, r: &EulerZyz, v: &DVector<C64>) -> DVector<C64> {
        let mut w = v.clone();
        self.z_phase(r.gamma, &mut w);
        let mut w = self.y_rotate(r.beta, &w);
        self.z_phase(r.alpha, &mut w);
        w
    }

    /// `D(R)^dagger v`.
    pub fn apply_inverse(&self, r: &EulerZyz, v: &DVector<C64>) -> DVector<C64> {
        self.apply(&r.inverse(), v)
    }

    /// `D(R)` as a dense matrix.
    pub fn matrix(&self, r: &EulerZyz) -> DMatrix<C64> {
        let d = self.m.len();
        let mut y = self.y_rotation_matrix(r.beta);
        for row in 0..d {
            for col in 0..d {
                y[(row, col)] *= C64::from_polar(1.0, -r.alpha * self.m[row] - r.gamma * self.m[col]);
            }
        }
        y
    }

    /// `exp(-i angle S_y)` as a dense matrix.
    pub fn y_rotation_matrix(&self, angle: f64) -> DMatrix<C64> {
        let mut scaled = self.y_vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, -angle * self.y_values[k]);
        }
        scaled * &self.y_vectors_adj
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_spin_operators, max_abs, spectral_decomposition};

    fn expm_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
        let (vals, v) = spectral_decomposition(h);
        let mut scaled = v.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= C64::from_polar(1.0, -t * vals[k]);
        }
        scaled * v.adjoint()
    }

    #[test]
    fn axis_angle_matches_direct_exponential() {
        let ops = build_spin_operators(SpinSystem::new(7).unwrap()).unwrap();
        let cases = [
            ([0.0, 0.0, 1.0], 0.7),
            ([1.0, 0.0, 0.0], 1.3),
            ([0.0, 1.0, 0.0], -2.1),
            ([0.48, -0.6, 0.64], 2.9),
            ([0.0, -0.6, -0.8], 3.1),
        ];
        for (axis, angle) in cases {
            let e = EulerZyz::from_axis_angle(axis, angle).unwrap();
            let direct = expm_hermitian(ops.spin_direction(axis).unwrap().matrix(), angle);
            let got = ops.rotator().matrix(&e);
            // SO(3) Euler angles fix D(R) only up to the sign (-1)^(2s)
            let sign = (got[(0, 0)] / direct[(0, 0)]).re.signum();
            assert!(max_abs(&(got * C64::new(sign, 0.0) - direct)) < 1e-10, "{axis:?} {angle}");
        }
    }

    #[test]
    fn spin_covariance() {
        let ops = build_spin_operators(SpinSystem::new(5).unwrap()).unwrap();
        let e = EulerZyz::new(0.3, 1.1, -0.4);
        let d = ops.rotator().matrix(&e);
        let r = e.matrix();
        for k in 0..3 {
            let lhs = &d * ops.components()[k].matrix() * d.adjoint();
            let rhs = ops.spin_component([r[0][k], r[1][k], r[2][k]]);
            assert!(max_abs(&(lhs - rhs.matrix())) < 1e-12);
        }
    }

    #[test]
    fn z_onto_maps_axis() {
        for d in [[1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [0.0, 0.0, -1.0], [0.0, 0.0, 1.0]] {
            let e = EulerZyz::z_onto(d).unwrap();
            let img = e.rotate([0.0, 0.0, 1.0]);
            for i in 0..3 {
                assert!((img[i] - d[i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn matrix_roundtrip_and_axis_angle() {
        for (axis, angle) in [([0.0, 0.0, 1.0], 0.4), ([0.6, 0.0, 0.8], 3.14159), ([0.0, 1.0, 0.0], 1.0)] {
            let e = EulerZyz::from_axis_angle(axis, angle).unwrap();
            let (ax, an) = e.axis_angle();
            assert!((an - angle).abs() < 1e-6);
            for i in 0..3 {
                assert!((ax[i] - axis[i]).abs() < 1e-6);
            }
            let back = EulerZyz::from_matrix(&e.matrix()).matrix();
            let m = e.matrix();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((back[i][j] - m[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn inverse_undoes_apply() {
        let ops = build_spin_operators(SpinSystem::new(6).unwrap()).unwrap();
        let e = EulerZyz::new(0.9, -0.5, 2.0);
        let v = DVector::<C64>::from_fn(7, |k, _| C64::new(k as f64, 1.0 - k as f64));
        let back = ops.rotator().apply_inverse(&e, &ops.rotator().apply(&e, &v));
        assert!((back - v).norm() < 1e-12);
    }
}
