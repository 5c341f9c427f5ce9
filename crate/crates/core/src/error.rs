use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Variants are grouped so that front ends can map them onto exit codes:
/// parameter problems, I/O problems, and protocol or estimation failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("empty mask: no pixels selected for the metric")]
    EmptyMask,

    #[error("region ({x}, {y}, {w}x{h}) lies outside the {width}x{height} image")]
    RegionOutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error on {path}: {message}")]
    Codec { path: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("rig rejected: {0}")]
    InvalidRig(String),

    #[error("no object found: {0}")]
    ObjectNotFound(String),

    #[error("protocol violation: object not tangent at angle 0 (gap {gap:.3} px)")]
    NotTangent { gap: f64 },

    #[error("no candidate accepted on the {axis} axis in {lo}..={hi}")]
    NoCandidateAccepted { axis: char, lo: i64, hi: i64 },

    #[error("estimation failed: {0}")]
    Estimation(String),
}

impl Error {
    /// Process exit code: 1 parameter error, 2 I/O error, 3 protocol or estimation failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch(..)
            | Error::EmptyMask
            | Error::RegionOutOfBounds { .. }
            | Error::Config(_)
            | Error::InvalidRig(_) => 1,
            Error::Io { .. } | Error::Codec { .. } => 2,
            Error::ObjectNotFound(_)
            | Error::NotTangent { .. }
            | Error::NoCandidateAccepted { .. }
            | Error::Estimation(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
