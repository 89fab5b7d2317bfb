//! SU(2) Husimi function `Q(theta, varphi) = |<theta, varphi|psi>|^2` on a
//! uniform angular grid.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{SpinOperators, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QGridSpec {
    /// Polar samples, `theta_i = pi i / (n_theta - 1)` including both poles.
    pub n_theta: usize,
    /// Azimuthal samples, `varphi_j = 2 pi j / n_phi`.
    pub n_phi: usize,
    /// Divide by the grid maximum.
    pub normalized: bool,
}

impl Default for QGridSpec {
    fn default() -> Self {
        Self { n_theta: 90, n_phi: 180, normalized: false }
    }
}

impl QGridSpec {
    pub fn theta(&self, i: usize) -> f64 {
        PI * i as f64 / (self.n_theta - 1) as f64
    }

    pub fn phi(&self, j: usize) -> f64 {
        TAU * j as f64 / self.n_phi as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub normalized: bool,
    /// Row-major: `values[i * n_phi + j]` is `Q(theta_i, varphi_j)`.
    pub values: Vec<f64>,
}

impl QGrid {
    pub fn spec(&self) -> QGridSpec {
        QGridSpec { n_theta: self.n_theta, n_phi: self.n_phi, normalized: self.normalized }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_phi + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_phi)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `int Q dOmega` by the trapezoid rule in `theta` (with `sin theta`) and
    /// the periodic rectangle rule in `varphi`. Meaningful for unnormalized grids.
    pub fn integral(&self) -> f64 {
        let spec = self.spec();
        let dt = PI / (self.n_theta - 1) as f64;
        let dp = TAU / self.n_phi as f64;
        self.rows()
            .enumerate()
            .map(|(i, row)| {
                let w = if i == 0 || i + 1 == self.n_theta { 0.5 } else { 1.0 };
                w * spec.theta(i).sin() * row.iter().sum::<f64>()
            })
            .sum::<f64>()
            * dt
            * dp
    }
}

/// Samples `Q` of a pure state on the grid.
///
/// The coherent state is `exp(i varphi S_z) exp(i theta S_y) |s, s>`, so for a
/// fixed `theta` the overlap is a short Fourier sum over `m`.
pub fn husimi_q(ops: &SpinOperators, psi: &StateVector, spec: &QGridSpec) -> Result<QGrid> {
    if spec.n_theta < 2 || spec.n_phi == 0 {
        return Err(Error::EmptyGrid);
    }
    ops.system().check_dim(psi.amplitudes().len())?;
    let dim = ops.system().dim();
    let m = ops.system().m_values();
    let mut top = DVector::<C64>::zeros(dim);
    top[0] = C64::new(1.0, 0.0);
    // azimuthal phases e^{-i varphi_j m}, shared by every row
    let phases: Vec<Vec<C64>> = (0..spec.n_phi)
        .map(|j| m.iter().map(|&mk| C64::from_polar(1.0, -spec.phi(j) * mk)).collect())
        .collect();
    let mut values: Vec<f64> = (0..spec.n_theta)
        .into_par_iter()
        .flat_map_iter(|i| {
            let col = ops.rotator().y_rotate(-spec.theta(i), &top);
            let w: Vec<C64> = col.iter().zip(psi.amplitudes().iter()).map(|(c, p)| c.conj() * p).collect();
            phases
                .iter()
                .map(|ph| ph.iter().zip(&w).map(|(a, b)| a * b).sum::<C64>().norm_sqr().min(1.0))
                .collect::<Vec<_>>()
        })
        .collect();
    if spec.normalized {
        let top = values.iter().copied().fold(0.0, f64::max);
        if top > 0.0 {
            values.iter_mut().for_each(|v| *v /= top);
        }
    }
    Ok(QGrid { n_theta: spec.n_theta, n_phi: spec.n_phi, normalized: spec.normalized, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Simulator;
    use crate::spin::{coherent_state, EulerZyz, SpinSystem};

    fn ops(n: usize) -> SpinOperators {
        SpinOperators::new(SpinSystem::new(n).unwrap()).unwrap()
    }

    #[test]
    fn coherent_state_peaks_at_itself_and_vanishes_opposite() {
        let o = ops(10);
        let spec = QGridSpec { n_theta: 21, n_phi: 40, normalized: false };
        let (i, j) = (7, 9);
        let psi = coherent_state(&o, spec.theta(i), spec.phi(j));
        let q = husimi_q(&o, &psi, &spec).unwrap();
        assert!((q.at(i, j) - 1.0).abs() < 1e-12);
        let anti = q.at(spec.n_theta - 1 - i, (j + spec.n_phi / 2) % spec.n_phi);
        assert!(anti < 1e-12, "{anti}");
        assert!(q.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn matches_direct_overlap() {
        let o = ops(6);
        let sim = Simulator::tnt(6, 2.0).unwrap();
        let psi = sim.prepare(&sim.initial_state().unwrap(), 0.3).unwrap();
        let spec = QGridSpec { n_theta: 7, n_phi: 8, normalized: false };
        let q = husimi_q(&o, &psi, &spec).unwrap();
        for i in 0..7 {
            for j in 0..8 {
                let c = coherent_state(&o, spec.theta(i), spec.phi(j));
                let want = c.overlap(&psi).norm_sqr();
                assert!((q.at(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadrature_normalization() {
        for n in [4, 20, 100] {
            let o = ops(n);
            let sim = Simulator::tnt(n, 2.0).unwrap();
            let psi = sim.prepare(&sim.initial_state().unwrap(), 0.05).unwrap();
            let q = husimi_q(&o, &psi, &QGridSpec::default()).unwrap();
            let total = q.integral() * (n as f64 + 1.0) / (4.0 * PI);
            assert!((total - 1.0).abs() < 1e-3, "N={n}: {total}");
        }
    }

    #[test]
    fn z_rotation_shifts_columns() {
        let o = ops(12);
        let sim = Simulator::tnt(12, 2.0).unwrap();
        let psi = sim.prepare(&sim.initial_state().unwrap(), 0.2).unwrap();
        let spec = QGridSpec { n_theta: 13, n_phi: 24, normalized: false };
        let shift = 5;
        // with the e^{i varphi S_z} convention, exp(-i a S_z) psi has
        // Q_1(varphi) = Q_0(varphi + a)
        let rotated = psi.rotated(&o, &EulerZyz::new(spec.phi(shift), 0.0, 0.0)).unwrap();
        let q0 = husimi_q(&o, &psi, &spec).unwrap();
        let q1 = husimi_q(&o, &rotated, &spec).unwrap();
        for i in 0..spec.n_theta {
            for j in 0..spec.n_phi {
                assert!((q1.at(i, j) - q0.at(i, (j + shift) % spec.n_phi)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn normalized_grid_peaks_at_one() {
        let o = ops(8);
        let psi = coherent_state(&o, 1.0, 2.0);
        let q = husimi_q(&o, &psi, &QGridSpec { normalized: true, ..Default::default() }).unwrap();
        assert!((q.max() - 1.0).abs() < 1e-15);
        assert!(husimi_q(&o, &psi, &QGridSpec { n_theta: 1, n_phi: 4, normalized: false }).is_err());
    }
}
