use thiserror::Error;

/// Errors produced anywhere in the geometry pipeline.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid knot vector: {0}")]
    InvalidKnots(String),

    #[error("basis index k={k}, degree={degree} needs {needed} knots, but only {available} are present")]
    IndexOutOfRange {
        k: usize,
        degree: usize,
        needed: usize,
        available: usize,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unsupported degree {degree}: {reason}")]
    UnsupportedDegree { degree: usize, reason: &'static str },

    #[error("parameter {ts} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { ts: f64, lo: f64, hi: f64 },

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid surface: {0}")]
    InvalidSurface(String),

    #[error("too few points: need at least {needed}, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("collocation matrix is rank deficient: rank {rank} of {columns} columns (smallest singular value {smallest:e}, largest {largest:e})")]
    RankDeficient {
        rank: usize,
        columns: usize,
        smallest: f64,
        largest: f64,
    },

    #[error("control points are not planar")]
    NonPlanar,

    #[error("degenerate contour: {0}")]
    DegenerateContour(String),

    #[error("feature dimension {0} is constant and cannot be normalized")]
    ConstantDimension(usize),

    #[error("pipeline cannot proceed: {0}")]
    Insufficient(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.into())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        if e.is_io_error() {
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Parse(format!("{other:?}")),
            }
        } else {
            Error::Parse(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
