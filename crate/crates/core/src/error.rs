use thiserror::Error;

pub type Result<T> = std::result::Result<T, AnnulusError>;

/// Failure modes shared by every module.
///
/// Variants are split into three families that the command-line front end
/// maps onto distinct exit codes: malformed input, domain violations and
/// numerical-certificate failures (see [`AnnulusError::exit_code`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnulusError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("ill-conditioned recovery: radius {radius} to power {degree} leaves dynamic range {range:e} (bound {bound:e})")]
    IllConditioned {
        radius: f64,
        degree: usize,
        range: f64,
        bound: f64,
    },

    #[error("symbol vanishes on the annulus (min modulus {min_modulus:e} at radius {radius})")]
    SymbolNotInvertible { radius: f64, min_modulus: f64 },

    #[error("trusted truncation {trusted} too small (need at least {required})")]
    Truncation { trusted: usize, required: usize },

    #[error("function nearly vanishes on the contour |z| = {radius} (min modulus {min_modulus:e})")]
    NearZeroOnContour { radius: f64, min_modulus: f64 },

    #[error("winding integral {value} is not within {tolerance} of an integer at radius {radius}")]
    NonIntegerWinding {
        radius: f64,
        value: f64,
        tolerance: f64,
    },

    #[error("function vanishes inside the annulus of radius {s}: {detail}")]
    VanishingInAnnulus { s: f64, detail: String },

    #[error("winding number varies across radii: {windings:?}")]
    WindingMismatch { windings: Vec<(f64, i64)> },

    #[error("function is not unimodular on the unit circle (defect {defect:e})")]
    NotUnimodular { defect: f64 },

    #[error("no annulus in the search grid is free of zeros")]
    NoNonvanishingAnnulus,

    #[error("inconsistent period claim: {0}")]
    InconsistentPeriodClaim(String),

    #[error("zero function has no eigen-residual")]
    ZeroFunction,

    #[error("small divisor at index {k}: |alpha beta^k - lambda| = {divisor:e}")]
    SmallDivisor { k: i64, divisor: f64 },

    #[error("working precision exhausted at k = {k}: {detail}")]
    PrecisionExhausted { k: u64, detail: String },

    #[error("maximal set is indeterminate at this resolution: {0}")]
    Indeterminate(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl AnnulusError {
    /// Variant name, used as the machine-readable error kind in reports.
    pub fn kind(&self) -> &'static str {
        use AnnulusError::*;
        match self {
            InvalidInput(_) => "InvalidInput",
            Domain(_) => "Domain",
            Undefined(_) => "Undefined",
            IllConditioned { .. } => "IllConditioned",
            SymbolNotInvertible { .. } => "SymbolNotInvertible",
            Truncation { .. } => "Truncation",
            NearZeroOnContour { .. } => "NearZeroOnContour",
            NonIntegerWinding { .. } => "NonIntegerWinding",
            VanishingInAnnulus { .. } => "VanishingInAnnulus",
            WindingMismatch { .. } => "WindingMismatch",
            NotUnimodular { .. } => "NotUnimodular",
            NoNonvanishingAnnulus => "NoNonvanishingAnnulus",
            InconsistentPeriodClaim(_) => "InconsistentPeriodClaim",
            ZeroFunction => "ZeroFunction",
            SmallDivisor { .. } => "SmallDivisor",
            PrecisionExhausted { .. } => "PrecisionExhausted",
            Indeterminate(_) => "Indeterminate",
            Verification(_) => "Verification",
            Io(_) => "Io",
        }
    }

    /// 1 for unusable input, 2 for domain errors, 3 when the numerics refuse
    /// to certify an answer.
    pub fn exit_code(&self) -> i32 {
        use AnnulusError::*;
        match self {
            InvalidInput(_) | Io(_) => 1,
            NonIntegerWinding { .. }
            | SmallDivisor { .. }
            | Indeterminate(_)
            | PrecisionExhausted { .. }
            | IllConditioned { .. }
            | Verification(_) => 3,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for AnnulusError {
    fn from(e: std::io::Error) -> Self {
        AnnulusError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for AnnulusError {
    fn from(e: serde_json::Error) -> Self {
        AnnulusError::InvalidInput(e.to_string())
    }
}
