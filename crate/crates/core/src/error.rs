use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. Variant names are part of the
/// machine-readable CLI output, see [`Error::name`] and [`Error::module`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFiniteEntry(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("matrix exponential overflows")]
    Overflow,
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("spectrum touches the closed negative real axis (eigenvalue {re} + {im}i)")]
    SpectrumOnCut { re: f64, im: f64 },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("tuple is not canonical: {0}")]
    NotCanonical(String),
    #[error("tuples are not similar (max residual {max_residual:e})")]
    NotSimilar { max_residual: f64 },
    #[error("triple (A, b, c) is not canonical: {0}")]
    NotCanonicalTriple(String),
    #[error("S must be nonzero")]
    ZeroS,

    #[error("grid point {t} outside [0, {horizon}] or grid not increasing")]
    GridOutOfRange { t: f64, horizon: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("seed is not in G0: {0}")]
    NotInG0(String),
    #[error("seed is not in C: {0}")]
    NotInC(String),
    #[error("degenerate rescale: tau = {tau}, alpha = {alpha}")]
    DegenerateRescale { tau: f64, alpha: f64 },
    #[error("no distinguishing input found (best discrepancy {best:e})")]
    NoDistinguisherFound { best: f64 },
    #[error("tuple is not in B_alpha: {0}")]
    NotInBalpha(String),
    #[error("no admissible integer l with |l| <= {max}")]
    NoValidL { max: i64 },

    #[error("model order is ambiguous: {0}")]
    OrderAmbiguous(String),
    #[error("(A, c) is not observable at the rank tolerance")]
    UnobservablePair,
    #[error("identified tuple is not canonical: {0}")]
    NotCanonicalResult(String),
    #[error("least-squares fit residual {residual:e} exceeds {limit:e}")]
    PoorFit { residual: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Variant name, e.g. `"NotInC"`.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NonFiniteEntry(_) => "NonFiniteEntry",
            Error::ParseError { .. } => "ParseError",
            Error::Overflow => "Overflow",
            Error::NoConvergence => "NoConvergence",
            Error::SpectrumOnCut { .. } => "SpectrumOnCut",
            Error::DimensionTooLarge { .. } => "DimensionTooLarge",
            Error::NotCanonical(_) => "NotCanonical",
            Error::NotSimilar { .. } => "NotSimilar",
            Error::NotCanonicalTriple(_) => "NotCanonicalTriple",
            Error::ZeroS => "ZeroS",
            Error::GridOutOfRange { .. } => "GridOutOfRange",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NotInG0(_) => "NotInG0",
            Error::NotInC(_) => "NotInC",
            Error::DegenerateRescale { .. } => "DegenerateRescale",
            Error::NoDistinguisherFound { .. } => "NoDistinguisherFound",
            Error::NotInBalpha(_) => "NotInBalpha",
            Error::NoValidL { .. } => "NoValidL",
            Error::OrderAmbiguous(_) => "OrderAmbiguous",
            Error::UnobservablePair => "UnobservablePair",
            Error::NotCanonicalResult(_) => "NotCanonicalResult",
            Error::PoorFit { .. } => "PoorFit",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }

    /// Module that raises this error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::ShapeMismatch(_) | Error::NonFiniteEntry(_) | Error::ParseError { .. } => "core",
            Error::Overflow | Error::NoConvergence | Error::SpectrumOnCut { .. } => "matfun",
            Error::DimensionTooLarge { .. }
            | Error::NotCanonical(_)
            | Error::NotSimilar { .. }
            | Error::NotCanonicalTriple(_)
            | Error::ZeroS => "realization",
            Error::GridOutOfRange { .. } => "simulate",
            Error::DimensionMismatch(_)
            | Error::NotInG0(_)
            | Error::NotInC(_)
            | Error::DegenerateRescale { .. }
            | Error::NoDistinguisherFound { .. }
            | Error::NotInBalpha(_)
            | Error::NoValidL { .. } => "counterex",
            Error::OrderAmbiguous(_)
            | Error::UnobservablePair
            | Error::NotCanonicalResult(_)
            | Error::PoorFit { .. } => "identify",
            Error::InvalidArgument(_) => "core",
        }
    }
}
