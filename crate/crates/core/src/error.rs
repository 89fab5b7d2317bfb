use thiserror::Error;

/// Failures raised while building spin objects or evaluating metrology quantities.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("atom number must be at least 1")]
    ZeroAtoms,

    #[error("direction must be a unit vector (norm {norm})")]
    NonUnitVector { norm: f64 },

    #[error("operator is not Hermitian (max residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not unitary (max residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate spectrum: eigenvalue of multiplicity {multiplicity} at {value}")]
    DegenerateSpectrum { value: f64, multiplicity: usize },

    #[error("state is not normalized (norm^2 = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),

    #[error("detection noise must be non-negative and finite, got {0}")]
    InvalidSigma(f64),

    #[error("mean spin vanishes; squeezing parameter undefined")]
    VanishingMeanSpin,

    #[error("probability distributions live on different outcome grids ({left} vs {right})")]
    GridMismatch { left: usize, right: usize },

    #[error("grid must contain at least one point")]
    EmptyGrid,

    #[error(
        "fisher information evaluated too close to a parity zero: \
         dropped outcomes may carry up to {bound:e} of information"
    )]
    NearParityZero { bound: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
