//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("presentation mismatch: {left} vs {right}")]
    PresentationMismatch { left: String, right: String },

    #[error("unknown generator {name:?}")]
    UnknownGenerator { name: String },

    #[error("malformed word {input:?}: {reason}")]
    WordParse { input: String, reason: String },

    #[error("enumeration requires finite factor orders (factor {factor} has infinite order)")]
    InfiniteEnumeration { factor: usize },

    #[error("matrix realization is only available for the order-(2,3) free product")]
    NoMatrixRealization,

    #[error("matrix has determinant {det}, expected 1")]
    NonUnimodular { det: String },

    #[error("counting pattern must be a nonempty word")]
    EmptyPattern,

    #[error("exponent-sum weights require a free presentation")]
    WeightsNeedFreeGroup,

    #[error("homogenization needs at least one doubling")]
    ZeroDoublings,

    #[error("quasimorphism carries no certified defect bound")]
    MissingDefectBound,

    #[error("witness element homogenizes too close to zero: estimate {estimate}, error bound {error_bound}")]
    ZeroWitness { estimate: String, error_bound: String },

    #[error("integerization rejected: {property} failed at {witness} ({detail})")]
    IntegerizationFailed {
        property: String,
        witness: String,
        detail: String,
    },

    #[error("point {point} is outside the embedded truncation")]
    OutOfTruncation { point: String },

    #[error("word {word:?} is not assigned within the embedding truncation")]
    UnassignedWord { word: String },

    #[error("triple axiom {axiom} violated at {witness}: {detail}")]
    AxiomViolation {
        axiom: String,
        witness: String,
        detail: String,
    },

    #[error("certificate failed at stage {stage}: {detail}")]
    CertificateFailed { stage: String, detail: String },

    #[error("displacement width {width} exceeds configured bound {bound} for {element}")]
    WidthExceeded {
        width: String,
        bound: String,
        element: String,
    },

    #[error("density is negative at {at}")]
    NegativeDensity { at: String },

    #[error("density must integrate to 1 over one period, got {integral}")]
    DensityNotNormalized { integral: String },

    #[error("map data is not strictly monotone: {detail}")]
    NotMonotone { detail: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
