use nalgebra::{DVector, Matrix3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{cross3, norm3, SpinOperators, StateVector};

const MEAN_SPIN_FLOOR: f64 = 1e-9;

/// Mean spin vector and symmetrized covariance
/// `G_ij = Re<S_i S_j> - <S_i><S_j>`.
pub fn spin_covariance(ops: &SpinOperators, psi: &StateVector) -> Result<([f64; 3], Matrix3<f64>)> {
    ops.system().check_dim(psi.amplitudes().len())?;
    let v = psi.amplitudes();
    let w: Vec<DVector<C64>> = ops.components().iter().map(|op| op.matrix() * v).collect();
    let mean: Vec<f64> = w.iter().map(|wi| v.dotc(wi).re).collect();
    let cov = Matrix3::from_fn(|i, j| w[i].dotc(&w[j]).re - mean[i] * mean[j]);
    Ok(([mean[0], mean[1], mean[2]], cov))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Squeezing {
    pub xi2: f64,
    pub gain: f64,
    /// Transverse direction of minimal variance.
    pub direction: [f64; 3],
}

/// Wineland parameter `xi^2 = N min_{n perp <S>} Var(S_n) / |<S>|^2` and the
/// gain `1 / xi^2`.
pub fn squeezing_gain(ops: &SpinOperators, psi: &StateVector) -> Result<Squeezing> {
    let (mean, cov) = spin_covariance(ops, psi)?;
    let len = norm3(mean);
    if len <= MEAN_SPIN_FLOOR {
        return Err(Error::VanishingMeanSpin);
    }
    let u = [mean[0] / len, mean[1] / len, mean[2] / len];
    // any axis not parallel to u seeds the transverse frame
    let seed = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let e1 = {
        let c = cross3(u, seed);
        let n = norm3(c);
        [c[0] / n, c[1] / n, c[2] / n]
    };
    let e2 = cross3(u, e1);
    let quad = |a: [f64; 3], b: [f64; 3]| -> f64 {
        (0..3).map(|i| (0..3).map(|j| a[i] * cov[(i, j)] * b[j]).sum::<f64>()).sum()
    };
    let (a, b, c) = (quad(e1, e1), quad(e1, e2), quad(e2, e2));
    let half_gap = ((a - c) / 2.0).hypot(b);
    let vmin = ((a + c) / 2.0 - half_gap).max(0.0);
    // eigenvector of [[a, b], [b, c]] for vmin
    let angle = 0.5 * (2.0 * b).atan2(a - c) + std::f64::consts::FRAC_PI_2;
    let (s, co) = angle.sin_cos();
    let direction = [
        co * e1[0] + s * e2[0],
        co * e1[1] + s * e2[1],
        co * e1[2] + s * e2[2],
    ];
    let xi2 = ops.system().n_atoms() as f64 * vmin / (len * len);
    Ok(Squeezing { xi2, gain: 1.0 / xi2, direction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Simulator;
    use crate::spin::{coherent_state, SpinSystem};

    #[test]
    fn coherent_state_is_unsqueezed() {
        let ops = SpinOperators::new(SpinSystem::new(10).unwrap()).unwrap();
        for (t, p) in [(0.3, 0.2), (1.5707963, 0.0), (2.9, 4.0)] {
            let s = squeezing_gain(&ops, &coherent_state(&ops, t, p)).unwrap();
            assert!((s.xi2 - 1.0).abs() < 1e-9);
            assert!((s.gain - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn squeezed_direction_has_reported_variance() {
        let sim = Simulator::oat(30).unwrap();
        let psi = sim.prepare(&sim.initial_state().unwrap(), 0.05).unwrap();
        let s = squeezing_gain(sim.ops(), &psi).unwrap();
        assert!(s.gain > 1.0);
        let sn = sim.ops().spin_direction(s.direction).unwrap();
        let m = sn.expectation(&psi).re;
        let sq = sn.compose(&sn).unwrap().expectation(&psi).re;
        let (mean, _) = spin_covariance(sim.ops(), &psi).unwrap();
        let xi2 = 30.0 * (sq - m * m) / norm3(mean).powi(2);
        assert!((xi2 - s.xi2).abs() < 1e-9, "{xi2} {}", s.xi2);
    }

    #[test]
    fn dicke_state_has_no_mean_spin() {
        let ops = SpinOperators::new(SpinSystem::new(4).unwrap()).unwrap();
        let psi = StateVector::basis_state(ops.system(), 2).unwrap();
        assert_eq!(squeezing_gain(&ops, &psi), Err(Error::VanishingMeanSpin));
    }
}
