//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset contains no samples")]
    EmptyDataset,

    #[error("dataset has {n} samples but at least {required} are required")]
    TooFewSamples { n: usize, required: usize },

    #[error("matrix is not symmetric: max |A - A'| entry {deviation:.3e} exceeds {tolerance:.1e}")]
    NotSymmetric { deviation: f64, tolerance: f64 },

    #[error("rank k = {k} out of range for dimension p = {p}")]
    RankOutOfRange { k: usize, p: usize },

    #[error("evaluation point {lambda} too close to the bulk edge {edge} (margin {margin:.1e})")]
    PoleViolation { lambda: f64, edge: f64, margin: f64 },

    #[error("spectral gap lambda_k - lambda_(k+1) = {gap:.3e} is degenerate")]
    DegenerateGap { gap: f64 },

    #[error("spectral summary does not record the sample count n")]
    MissingSampleCount,

    #[error("beta = {beta} is outside the regime of the privacy curve (requires beta > H = {h})")]
    OutOfRegime { beta: f64, h: f64 },

    #[error(
        "target w^2 = {w_sq} is below sigma_min^2 = {sigma_min_sq}; \
         no beta achieves a privacy level this strong"
    )]
    InfeasibleTarget { w_sq: f64, sigma_min_sq: f64 },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("row norm^2 = {norm_sq} exceeds the certified bound p = {bound}")]
    NormViolation { norm_sq: f64, bound: f64 },

    #[error("privacy budget must be positive, got {value}")]
    NonpositiveBudget { value: f64 },

    #[error("independence chain found no feasible state in {attempts} consecutive proposals")]
    ChainInitFailure { attempts: usize },

    #[error("sphere quadrature supports p in {{2, 3}}, got p = {p}")]
    UnsupportedDimension { p: usize },

    #[error("argument out of domain: {context}")]
    DomainError { context: String },

    #[error("non-finite value encountered: {context}")]
    NonFinite { context: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 = configuration, 3 = data, 4 = regime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::NonpositiveBudget { .. } | Error::RankOutOfRange { .. } => 2,
            Error::EmptyDataset
            | Error::TooFewSamples { .. }
            | Error::NotSymmetric { .. }
            | Error::DimensionMismatch { .. }
            | Error::NormViolation { .. }
            | Error::MissingSampleCount
            | Error::NonFinite { .. }
            | Error::Parse(_)
            | Error::Io(_) => 3,
            Error::PoleViolation { .. }
            | Error::DegenerateGap { .. }
            | Error::OutOfRegime { .. }
            | Error::InfeasibleTarget { .. }
            | Error::ChainInitFailure { .. }
            | Error::UnsupportedDimension { .. }
            | Error::DomainError { .. } => 4,
        }
    }
}
