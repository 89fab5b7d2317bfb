use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::noise::{Measurement, NoiseKernel, NoiseModel, ProbDist};
use crate::dynamics::{ProtocolSpec, Simulator};
use crate::error::{Error, Result};
use crate::spin::{SpinOperators, StateVector};

/// Phase at which Fisher information is evaluated by default. Away from
/// `phi = 0` no outcome sits exactly on a parity zero.
pub const DEFAULT_PHI_EVAL: f64 = 1e-4;
/// Outcomes with a (noisy) probability below this are left out of the sum.
pub const CFI_PROBABILITY_FLOOR: f64 = 1e-12;
/// Central-difference step for [`FisherMethod::FiniteDifference`].
pub const FD_STEP: f64 = 1e-6;
/// Largest tolerated bound on the information carried by dropped outcomes,
/// relative to `max(F_c, N)`.
const DROPPED_RELATIVE_LIMIT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMethod {
    Analytic,
    FiniteDifference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FisherResult {
    pub value: f64,
    pub phi_eval: f64,
    pub method: FisherMethod,
    /// Upper bound on the information discarded by the probability floor.
    pub dropped_bound: f64,
}

/// `F_c` and the dropped-term bound from final amplitudes `a_m = <b_m|psi>` and
/// their phase derivatives.
///
/// For a dropped outcome, Cauchy-Schwarz gives
/// `(dP~_m)^2 / P~_m <= 4 sum_m' K[m,m'] |da_m'|^2`, which is what gets summed
/// into the bound.
pub(crate) fn fisher_from_amplitudes(a: &DVector<C64>, da: &DVector<C64>, kernel: &NoiseKernel) -> (f64, f64) {
    let p: Vec<f64> = a.iter().map(|z| z.norm_sqr()).collect();
    let dp: Vec<f64> = a.iter().zip(da.iter()).map(|(z, dz)| 2.0 * (z.conj() * dz).re).collect();
    let slope_sqr: Vec<f64> = da.iter().map(|dz| 4.0 * dz.norm_sqr()).collect();
    let pn = kernel.apply(&p);
    let dpn = kernel.apply(&dp);
    let mut value = 0.0;
    let mut dropped = Vec::new();
    for (m, (&pm, &dm)) in pn.iter().zip(&dpn).enumerate() {
        if pm < CFI_PROBABILITY_FLOOR {
            dropped.push(m);
        } else {
            value += dm * dm / pm;
        }
    }
    let bound = match kernel.weights() {
        None => dropped.iter().map(|&m| slope_sqr[m]).sum(),
        Some(k) => dropped
            .iter()
            .map(|&m| (0..slope_sqr.len()).map(|mp| k[(m, mp)] * slope_sqr[mp]).sum::<f64>())
            .sum(),
    };
    (value, bound)
}

fn fisher_from_probs(p: &[f64], dp: &[f64]) -> f64 {
    p.iter()
        .zip(dp)
        .filter(|(pm, _)| **pm >= CFI_PROBABILITY_FLOOR)
        .map(|(pm, dm)| dm * dm / pm)
        .sum()
}

pub(crate) fn check_dropped(value: f64, bound: f64, n_atoms: usize) -> Result<()> {
    if bound > DROPPED_RELATIVE_LIMIT * value.max(n_atoms as f64) {
        return Err(Error::NearParityZero { bound });
    }
    Ok(())
}

/// Classical Fisher information of the protocol `spec` measured in
/// `spec.measurement` with Gaussian detection noise, at phase `phi_eval`.
pub fn cfi(
    sim: &Simulator,
    spec: &ProtocolSpec,
    psi0: &StateVector,
    noise: NoiseModel,
    phi_eval: f64,
    method: FisherMethod,
) -> Result<FisherResult> {
    spec.validate()?;
    let prepared = sim.prepare(psi0, spec.t1)?;
    let meas = Measurement::new(sim.ops(), spec.measurement)?;
    let kernel = NoiseKernel::new(sim.system().dim(), noise);
    cfi_prepared(sim, spec, prepared.amplitudes(), &meas, &kernel, phi_eval, method)
}

/// [`cfi`] for an already prepared state `U_1 |psi_0>` and a precomputed
/// measurement and noise kernel.
pub fn cfi_prepared(
    sim: &Simulator,
    spec: &ProtocolSpec,
    prepared: &DVector<C64>,
    meas: &Measurement,
    kernel: &NoiseKernel,
    phi_eval: f64,
    method: FisherMethod,
) -> Result<FisherResult> {
    if !phi_eval.is_finite() {
        return Err(Error::InvalidParameter("phi_eval must be finite".into()));
    }
    let sig = sim.signal_from_prepared(spec, prepared, phi_eval)?;
    let a = meas.amplitudes(&sig.psi);
    let da = meas.amplitudes(&sig.dpsi);
    let (analytic, bound) = fisher_from_amplitudes(&a, &da, kernel);
    let value = match method {
        FisherMethod::Analytic => analytic,
        FisherMethod::FiniteDifference => {
            let probs_at = |phi: f64| -> Result<Vec<f64>> {
                let s = sim.signal_from_prepared(spec, prepared, phi)?;
                Ok(kernel.apply(&meas.probs(&s.psi)))
            };
            let plus = probs_at(phi_eval + FD_STEP)?;
            let minus = probs_at(phi_eval - FD_STEP)?;
            let p = kernel.apply(&meas.probs(&sig.psi));
            let dp: Vec<f64> = plus.iter().zip(&minus).map(|(u, v)| (u - v) / (2.0 * FD_STEP)).collect();
            fisher_from_probs(&p, &dp)
        }
    };
    check_dropped(value, bound, sim.system().n_atoms())?;
    Ok(FisherResult { value: value.max(0.0), phi_eval, method, dropped_bound: bound })
}

/// Noisy outcome distribution of the protocol at phase `phi`.
pub fn outcome_distribution(
    sim: &Simulator,
    spec: &ProtocolSpec,
    psi0: &StateVector,
    noise: NoiseModel,
    phi: f64,
) -> Result<ProbDist> {
    let sig = sim.signal_at(spec, psi0, phi)?;
    let meas = Measurement::new(sim.ops(), spec.measurement)?;
    let kernel = NoiseKernel::new(sim.system().dim(), noise);
    let mut probs = kernel.apply(&meas.probs(&sig.psi));
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    ProbDist::new(sim.system(), probs, noise.sigma())
}

/// `8 d_H^2(phi, phi + dphi) / dphi^2`, which tends to `F_c(phi)` as
/// `dphi -> 0`. The base phase is `spec.phi`.
pub fn hellinger_cfi_estimate(
    sim: &Simulator,
    spec: &ProtocolSpec,
    psi0: &StateVector,
    noise: NoiseModel,
    dphi: f64,
) -> Result<f64> {
    if !(dphi.is_finite() && dphi != 0.0) {
        return Err(Error::InvalidParameter("dphi must be finite and nonzero".into()));
    }
    let p = outcome_distribution(sim, spec, psi0, noise, spec.phi)?;
    let q = outcome_distribution(sim, spec, psi0, noise, spec.phi + dphi)?;
    Ok(8.0 * super::hellinger(&p, &q)? / (dphi * dphi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QfiResult {
    pub value: f64,
    /// Direction `n` maximizing `Var(S_n)`, sign fixed so its largest
    /// component is positive.
    pub optimal_dir: [f64; 3],
}

/// Pure-state QFI `4 max_n Var(S_n)`, from the top eigenpair of the
/// symmetrized spin covariance matrix.
pub fn qfi_pure(ops: &SpinOperators, psi: &StateVector) -> Result<QfiResult> {
    let (_, cov) = super::spin_covariance(ops, psi)?;
    let eig = cov.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    let v = eig.eigenvectors.column(top);
    let mut dir = [v[0], v[1], v[2]];
    let lead = (0..3).max_by(|&i, &j| dir[i].abs().total_cmp(&dir[j].abs())).unwrap_or(0);
    if dir[lead] < 0.0 {
        dir.iter_mut().for_each(|x| *x = -*x);
    }
    Ok(QfiResult { value: 4.0 * eig.eigenvalues[top].max(0.0), optimal_dir: dir })
}

/// QFI-optimal phase generator direction of a state.
pub fn optimal_generator(ops: &SpinOperators, psi: &StateVector) -> Result<[f64; 3]> {
    Ok(qfi_pure(ops, psi)?.optimal_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{HamiltonianSpec, Readout};
    use crate::metrology::{hellinger, measurement_probs};
    use crate::spin::{coherent_state, BasisSpec, SpinSystem};

    fn protocol(sim: &Simulator, t1: f64, readout: Readout, n: [f64; 3], basis: BasisSpec) -> ProtocolSpec {
        ProtocolSpec {
            hamiltonian: *sim.hamiltonian_spec(),
            t1,
            readout,
            phi: 0.0,
            generator_dir: n,
            measurement: basis,
        }
    }

    // Independent evaluation of the classical Fisher information: rebuild
    // the outcome distribution from dense matrices at phi +- h and sum the
    // squared slopes over the probabilities.
    fn brute_force_cfi(n_atoms: usize, t1: f64, dir: [f64; 3], basis: BasisSpec, phi: f64) -> f64 {
        let sim = Simulator::new(
            SpinOperators::new(SpinSystem::new(n_atoms).unwrap()).unwrap(),
            HamiltonianSpec::oat(SpinSystem::new(n_atoms).unwrap()),
        )
        .unwrap();
        let ops = sim.ops();
        let psi0 = sim.initial_state().unwrap();
        let u1 = sim.evolution().propagator(t1);
        let sn = ops.spin_direction(dir).unwrap();
        let probs = |phi: f64| {
            let uphi = crate::dynamics::propagator(&sn, phi).unwrap();
            let v = uphi.matrix() * u1.matrix() * psi0.amplitudes();
            let st = StateVector::from_unnormalized(ops.system(), v).unwrap();
            measurement_probs(ops, &st, &basis).unwrap().probs().to_vec()
        };
        let h = 1e-5;
        let (p, pp, pm) = (probs(phi), probs(phi + h), probs(phi - h));
        (0..p.len())
            .filter(|&m| p[m] > 1e-14)
            .map(|m| ((pp[m] - pm[m]) / (2.0 * h)).powi(2) / p[m])
            .sum()
    }

    #[test]
    fn coherent_state_sz_readout_reaches_shot_noise() {
        let sim = Simulator::oat(4).unwrap();
        let psi0 = sim.initial_state().unwrap();
        let spec = protocol(&sim, 0.0, Readout::None, [0.0, 1.0, 0.0], BasisSpec::Sz);
        let f = cfi(&sim, &spec, &psi0, NoiseModel::ideal(), 0.3, FisherMethod::Analytic).unwrap();
        let brute = brute_force_cfi(4, 0.0, [0.0, 1.0, 0.0], BasisSpec::Sz, 0.3);
        assert!((f.value - 4.0).abs() < 1e-9, "{}", f.value);
        assert!((brute - 4.0).abs() < 1e-5, "{brute}");
    }

    #[test]
    fn coherent_state_sx_readout_has_shot_noise_info_away_from_zero() {
        let sim = Simulator::oat(4).unwrap();
        let psi0 = sim.initial_state().unwrap();
        let spec = protocol(&sim, 0.0, Readout::None, [0.0, 1.0, 0.0], BasisSpec::Sx);
        let f = cfi(&sim, &spec, &psi0, NoiseModel::ideal(), 0.2, FisherMethod::Analytic).unwrap();
        assert!((f.value - 4.0).abs() < 1e-9, "{}", f.value);
    }

    #[test]
    fn analytic_matches_brute_force_for_squeezed_state() {
        let sim = Simulator::oat(6).unwrap();
        let psi0 = sim.initial_state().unwrap();
        let dir = [0.0, 0.6, 0.8];
        let basis = BasisSpec::Rotated { axis: [0.3, 0.4, 0.866_025_403_784_438_6], angle: 0.7 };
        let spec = protocol(&sim, 0.3, Readout::None, dir, basis);
        let f = cfi(&sim, &spec, &psi0, NoiseModel::ideal(), 0.05, FisherMethod::Analytic).unwrap();
        let brute = brute_force_cfi(6, 0.3, dir, basis, 0.05);
        assert!((f.value - brute).abs() < 1e-5 * brute.max(1.0), "{} vs {brute}", f.value);
    }

    #[test]
    fn analytic_and_finite_difference_agree_under_noise() {
        let sim = Simulator::tnt(20, 2.0).unwrap();
        let psi0 = sim.initial_state().unwrap();
        let prep = sim.prepare(&psi0, 0.1).unwrap();
        let dir = qfi_pure(sim.ops(), &prep).unwrap().optimal_dir;
        for readout in [Readout::None, Readout::Echo] {
            let spec = protocol(&sim, 0.1, readout, dir, BasisSpec::Sx);
            for sigma in [0.0, 1.0, 3.0] {
                let noise = NoiseModel::new(sigma).unwrap();
                let a = cfi(&sim, &spec, &psi0, noise, DEFAULT_PHI_EVAL, FisherMethod::Analytic).unwrap();
                let d = cfi(&sim, &spec, &psi0, noise, DEFAULT_PHI_EVAL, FisherMethod::FiniteDifference).unwrap();
                assert!((a.value - d.value).abs() < 1e-4 * a.value, "{} {}", a.value, d.value);
            }
        }
    }

    #[test]
    fn parity_zero_at_phi_zero_is_reported() {
        let sim = Simulator::tnt(10, 2.0).unwrap();
        let psi0 = sim.initial_state().unwrap();
        let prep = sim.prepare(&psi0, 0.2).unwrap();
        let dir = qfi_pure(sim.ops(), &prep).unwrap().optimal_dir;
        let spec = protocol(&sim, 0.2, Readout::None, dir, BasisSpec::Sx);
        let r = cfi(&sim, &spec, &psi0, NoiseModel::ideal(), 0.0, FisherMethod::Analytic);
        assert!(matches!(r, Err(Error::NearParityZero { .. })), "{r:?}");
        assert!(cfi(&sim, &spec, &psi0, NoiseModel::ideal(), DEFAULT_PHI_EVAL, FisherMethod::Analytic).is_ok());
    }

    #[test]
    fn hellinger_estimate_tracks_cfi() {
        let sim = Simulator::oat(4).unwrap();
        let psi0 = sim.initial_state().unwrap();
        let mut spec = protocol(&sim, 0.0, Readout::None, [0.0, 1.0, 0.0], BasisSpec::Sz);
        spec.phi = 0.3;
        let est = hellinger_cfi_estimate(&sim, &spec, &psi0, NoiseModel::ideal(), 1e-3).unwrap();
        assert!((est - 4.0).abs() < 1e-2, "{est}");
    }

    #[test]
    fn hellinger_estimate_remainder_shrinks_with_step() {
        let sim = Simulator::tnt(12, 2.0).unwrap();
        let psi0 = sim.initial_state().unwrap();
        let prep = sim.prepare(&psi0, 0.1).unwrap();
        let dir = qfi_pure(sim.ops(), &prep).unwrap().optimal_dir;
        let mut spec = protocol(&sim, 0.1, Readout::None, dir, BasisSpec::Sz);
        spec.phi = 0.2;
        let f = cfi(&sim, &spec, &psi0, NoiseModel::ideal(), 0.2, FisherMethod::Analytic).unwrap().value;
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&d| (hellinger_cfi_estimate(&sim, &spec, &psi0, NoiseModel::ideal(), d).unwrap() - f).abs())
            .collect();
        assert!(errs[1] < errs[0] / 5.0 && errs[2] < errs[1] / 5.0, "{errs:?}");
    }

    #[test]
    fn coherent_qfi_is_n() {
        let ops = SpinOperators::new(SpinSystem::new(8).unwrap()).unwrap();
        let psi = coherent_state(&ops, 0.7, 1.1);
        let q = qfi_pure(&ops, &psi).unwrap();
        assert!((q.value - 8.0).abs() < 1e-10);
        let top = StateVector::basis_state(ops.system(), 0).unwrap();
        let q = qfi_pure(&ops, &top).unwrap();
        assert!((q.value - 8.0).abs() < 1e-10);
        assert!(q.optimal_dir[2].abs() < 1e-10);
    }

    #[test]
    fn distance_between_far_phases() {
        let sim = Simulator::oat(4).unwrap();
        let psi0 = sim.initial_state().unwrap();
        let spec = protocol(&sim, 0.0, Readout::None, [0.0, 0.0, 1.0], BasisSpec::Sx);
        let p = outcome_distribution(&sim, &spec, &psi0, NoiseModel::ideal(), 0.0).unwrap();
        let q = outcome_distribution(&sim, &spec, &psi0, NoiseModel::ideal(), std::f64::consts::PI).unwrap();
        assert!((hellinger(&p, &q).unwrap() - 1.0).abs() < 1e-12);
    }
}
