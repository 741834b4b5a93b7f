use thiserror::Error;

/// Crate-wide error type. Variants mirror the precondition failures of the
/// public operations; anything not listed here is a bug, not an error.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("coordinates ({0}, {1}) mix integer and half-integer parts; lattice vertices need both on the same sublattice")]
    MixedParity(String, String),

    #[error("expected a vertex on the {expected} sublattice, got ({u}, {v})")]
    WrongSublattice {
        expected: &'static str,
        u: String,
        v: String,
    },

    #[error("weight {0} at ({1}, {2}) is outside [0, 1]")]
    WeightOutOfRange(String, String, String),

    #[error("the ratio weight u/(u+v) is undefined at ({0}, {1}); it needs u > 0 and v > 0")]
    PolyaAtBoundary(String, String),

    #[error("vertex ({0}, {1}) is outside the weight field domain")]
    OutOfDomain(String, String),

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityRange(String),

    #[error("interval endpoints are invalid: {0}")]
    InvalidIntervals(String),

    #[error("site list is invalid: {0}")]
    InvalidSites(String),

    #[error("endpoint list is empty")]
    EmptyEndpoints,

    #[error("endpoints lie on different diagonals ({0} vs {1})")]
    DifferentDiagonals(i64, i64),

    #[error("horizon {horizon} is invalid for diagonal {diagonal}")]
    BadHorizon { horizon: i64, diagonal: i64 },

    #[error("choice configuration does not cover vertex ({0}, {1})")]
    ConeNotCovered(String, String),

    #[error("window [{lo}, {hi}] does not determine every site between the endpoints; need at least [{need_lo}, {need_hi}]")]
    WindowTooNarrow {
        lo: i64,
        hi: i64,
        need_lo: i64,
        need_hi: i64,
    },

    #[error("enumeration needs {0} free choices; the cap is {1} (2^{1} configurations)")]
    ConeTooLarge(usize, u32),

    #[error("subset sum over {0} sites exceeds the cap of {1}")]
    SizeCap(usize, usize),

    #[error("matrix order {0} is odd; Pfaffians need even order")]
    OddOrder(usize),

    #[error("matrix order {0} exceeds the exact-expansion cap of {1}")]
    OrderCap(usize, usize),

    #[error("parameter {name} = {value} must be positive")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("kernel kind {0} has no exact rational evaluation")]
    KernelNotExact(&'static str),

    #[error("kernel horizon {kernel} does not match the interval diagonal {spec}")]
    HorizonMismatch { kernel: i64, spec: i64 },

    #[error("numerical self-check failed: {0}")]
    NumericalCheck(String),

    #[error("sample count must be positive")]
    NoSamples,
}

pub type Result<T> = std::result::Result<T, Error>;
