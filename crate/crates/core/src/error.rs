use thiserror::Error;

/// Every failure mode of the library. The CLI reports the variant name
/// (see [`Error::name`]) next to the exit code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {allowed:.3e}")]
    NotHermitian { defect: f64, allowed: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("spectrum point {eigenvalue} lies outside the domain of the function")]
    SpectrumOutOfDomain { eigenvalue: f64 },
    #[error("numerical range meets the closed left half-plane (min real part {margin:.3e})")]
    NotSectorial { margin: f64 },
    #[error("range inclusion violated: factorization residual {residual:.3e} exceeds {allowed:.3e}")]
    RangeInclusionViolated { residual: f64, allowed: f64 },
    #[error("pencil coefficient B_{index} is not PSD (min eigenvalue {min_eig:.3e})")]
    CoefficientNotPSD { index: usize, min_eig: f64 },
    #[error("B_0 does not dominate the sum of the other coefficients (min eigenvalue {min_eig:.3e})")]
    DominanceViolated { min_eig: f64 },
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("argument {index} is not sectorial")]
    InputNotSectorial { index: usize },
    #[error("matrix is not PSD (min eigenvalue {min_eig:.3e})")]
    NotPSD { min_eig: f64 },
    #[error("eliminated block is singular (smallest/largest singular value {ratio:.3e})")]
    EliminatedBlockSingular { ratio: f64 },
    #[error("argument tuple lies in neither the right nor the upper poly-halfspace")]
    DomainViolation,
    #[error("no rotation angle on the search grid makes the pencil sectorial")]
    RotationNotFound,
    #[error("argument {index} is singular")]
    SingularArgument { index: usize },
    #[error("matrix is not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("iteration did not converge after {iterations} steps (last change {change:.3e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("Moebius map has a pole on the argument")]
    PoleHit,
    #[error("finite-difference step underflow (last discrepancy {discrepancy:.3e})")]
    StepUnderflow { discrepancy: f64 },
    #[error("chain is not increasing at position {position}")]
    ChainNotIncreasing { position: usize },
    #[error("normalization constant is not positive ({alpha:.3e})")]
    NegativeNormalization { alpha: f64 },
    #[error("gradient matrix G_{index} is not PSD (min eigenvalue {min_eig:.3e})")]
    GradientNotPSD { index: usize, min_eig: f64 },
    #[error("support pencil fails on validation sample {sample} (min eigenvalue {min_eig:.3e})")]
    SupportViolated { sample: usize, min_eig: f64 },
    #[error("eliminated block fails its range check (residual {residual:.3e})")]
    EliminatedBlockDefective { residual: f64 },
    #[error("representation check failed at point {index} (residual {residual:.3e})")]
    VerificationFailed { index: usize, residual: f64 },
    #[error("quadrature error {error:.3e} exceeds requested tolerance {tol:.3e}")]
    QuadratureInaccurate { error: f64, tol: f64 },
    #[error("imaginary part of the output dips to {min_eig:.3e}")]
    HalfPlaneViolated { min_eig: f64 },
    #[error("unknown function identifier `{0}`")]
    UnknownFunction(String),
    #[error("bad configuration: {0}")]
    BadConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Variant name, as printed by the CLI.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotHermitian { .. } => "NotHermitian",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NotSquare { .. } => "NotSquare",
            Error::SpectrumOutOfDomain { .. } => "SpectrumOutOfDomain",
            Error::NotSectorial { .. } => "NotSectorial",
            Error::RangeInclusionViolated { .. } => "RangeInclusionViolated",
            Error::CoefficientNotPSD { .. } => "CoefficientNotPSD",
            Error::DominanceViolated { .. } => "DominanceViolated",
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::InputNotSectorial { .. } => "InputNotSectorial",
            Error::NotPSD { .. } => "NotPSD",
            Error::EliminatedBlockSingular { .. } => "EliminatedBlockSingular",
            Error::DomainViolation => "DomainViolation",
            Error::RotationNotFound => "RotationNotFound",
            Error::SingularArgument { .. } => "SingularArgument",
            Error::NotPositiveDefinite { .. } => "NotPositiveDefinite",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::PoleHit => "PoleHit",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::ChainNotIncreasing { .. } => "ChainNotIncreasing",
            Error::NegativeNormalization { .. } => "NegativeNormalization",
            Error::GradientNotPSD { .. } => "GradientNotPSD",
            Error::SupportViolated { .. } => "SupportViolated",
            Error::EliminatedBlockDefective { .. } => "EliminatedBlockDefective",
            Error::VerificationFailed { .. } => "VerificationFailed",
            Error::QuadratureInaccurate { .. } => "QuadratureInaccurate",
            Error::HalfPlaneViolated { .. } => "HalfPlaneViolated",
            Error::UnknownFunction(_) => "UnknownFunction",
            Error::BadConfig(_) => "BadConfig",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
