//! Outcome distributions, detection noise, Fisher information, squeezing and
//! statistical distances.

mod fisher;
mod noise;
mod squeezing;

pub use fisher::{
    cfi, cfi_prepared, hellinger_cfi_estimate, optimal_generator, outcome_distribution, qfi_pure, FisherMethod,
    FisherResult, QfiResult, CFI_PROBABILITY_FLOOR, DEFAULT_PHI_EVAL, FD_STEP,
};
pub(crate) use fisher::{check_dropped, fisher_from_amplitudes};
pub use noise::{
    convolve_noise, hellinger, measurement_probs, Measurement, NoiseKernel, NoiseModel, ProbDist,
    SIGMA_PASSTHROUGH,
};
pub use squeezing::{spin_covariance, squeezing_gain, Squeezing};
