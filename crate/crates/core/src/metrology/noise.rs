use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{BasisSpec, SpinOperators, SpinSystem, StateVector};

/// Widths below this are treated as noiseless.
pub const SIGMA_PASSTHROUGH: f64 = 1e-6;
const NORMALIZATION_TOLERANCE: f64 = 1e-10;
const NEGATIVE_CLAMP: f64 = -1e-14;

/// Outcome probabilities over the labels `m = s, s-1, ..., -s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbDist {
    system: SpinSystem,
    probs: Vec<f64>,
    noise_sigma: f64,
}

impl ProbDist {
    pub fn new(system: SpinSystem, probs: Vec<f64>, noise_sigma: f64) -> Result<Self> {
        system.check_dim(probs.len())?;
        if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
            return Err(Error::InvalidSigma(noise_sigma));
        }
        let mut probs = probs;
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < NEGATIVE_CLAMP {
                return Err(Error::InvalidParameter(format!("probability {p} out of range")));
            }
            *p = p.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { norm_sqr: total });
        }
        Ok(Self { system, probs, noise_sigma })
    }

    pub fn system(&self) -> SpinSystem {
        self.system
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.system.m_values()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    sigma: f64,
}

impl NoiseModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        Ok(Self { sigma })
    }

    pub fn ideal() -> Self {
        Self { sigma: 0.0 }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_ideal(&self) -> bool {
        self.sigma < SIGMA_PASSTHROUGH
    }
}

/// Column-normalized Gaussian blur over the physical outcome labels:
/// `K[m, m'] = C_{m'} exp(-(m - m')^2 / 2 sigma^2)` with `sum_m K[m, m'] = 1`.
#[derive(Clone, Debug)]
pub struct NoiseKernel {
    sigma: f64,
    weights: Option<DMatrix<f64>>,
}

impl NoiseKernel {
    pub fn new(dim: usize, noise: NoiseModel) -> Self {
        if noise.is_ideal() {
            return Self { sigma: noise.sigma(), weights: None };
        }
        let two_var = 2.0 * noise.sigma() * noise.sigma();
        let mut k = DMatrix::<f64>::from_fn(dim, dim, |m, mp| {
            let d = m as f64 - mp as f64;
            (-d * d / two_var).exp()
        });
        for mut col in k.column_iter_mut() {
            let c = col.sum();
            col /= c;
        }
        Self { sigma: noise.sigma(), weights: Some(k) }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_identity(&self) -> bool {
        self.weights.is_none()
    }

    pub fn weights(&self) -> Option<&DMatrix<f64>> {
        self.weights.as_ref()
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        match &self.weights {
            None => p.to_vec(),
            Some(k) => (k * DVector::from_column_slice(p)).iter().copied().collect(),
        }
    }
}

/// Blurs `p` with Gaussian detection noise. Widths add in quadrature in the
/// recorded `noise_sigma`.
pub fn convolve_noise(p: &ProbDist, noise: NoiseModel) -> ProbDist {
    let kernel = NoiseKernel::new(p.system.dim(), noise);
    let mut probs = kernel.apply(&p.probs);
    renormalize(&mut probs);
    ProbDist {
        system: p.system,
        probs,
        noise_sigma: p.noise_sigma.hypot(noise.sigma()),
    }
}

fn renormalize(p: &mut [f64]) {
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        p.iter_mut().for_each(|x| *x /= total);
    }
}

/// Projective measurement in a fixed basis, with the bra matrix precomputed.
#[derive(Clone, Debug)]
pub struct Measurement {
    basis: BasisSpec,
    bras: DMatrix<C64>,
}

impl Measurement {
    pub fn new(ops: &SpinOperators, basis: BasisSpec) -> Result<Self> {
        let u = basis.unitary(ops)?;
        Ok(Self { basis, bras: u.matrix().adjoint() })
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    /// `<b_k|v>` for every basis vector.
    pub fn amplitudes(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.bras * v
    }

    pub fn probs(&self, v: &DVector<C64>) -> Vec<f64> {
        self.amplitudes(v).iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Ideal outcome distribution `P_m = |<m|psi>|^2`.
pub fn measurement_probs(ops: &SpinOperators, psi: &StateVector, basis: &BasisSpec) -> Result<ProbDist> {
    ops.system().check_dim(psi.amplitudes().len())?;
    let meas = Measurement::new(ops, *basis)?;
    let mut probs = meas.probs(psi.amplitudes());
    renormalize(&mut probs);
    ProbDist::new(ops.system(), probs, 0.0)
}

/// Squared Hellinger distance `1 - sum_m sqrt(p_m q_m)`, clamped to `[0, 1]`.
pub fn hellinger(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    if p.probs.len() != q.probs.len() {
        return Err(Error::GridMismatch { left: p.probs.len(), right: q.probs.len() });
    }
    let overlap: f64 = p.probs.iter().zip(&q.probs).map(|(a, b)| (a * b).sqrt()).sum();
    Ok((1.0 - overlap).clamp(0.0, 1.0))
}
