//! Error taxonomy for the simulation library.
//!
//! Configuration problems (`Parse`, `Validation`, `NotImplemented`) are kept
//! distinct from runtime problems (shape mismatches, sync failures, singular
//! channels) so the CLI can map them to different exit codes.

use std::fmt;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by this crate.
#[derive(Debug)]
pub enum Error {
    /// Malformed config text or an unknown key.
    Parse { line: usize, message: String },
    /// A structurally valid config that violates a parameter invariant.
    Validation { key: String, message: String },
    /// A recognized config key for a feature that is deliberately absent.
    NotImplemented { feature: String },
    /// Operation applied to a grid of the wrong domain (real vs complex).
    Domain { message: String },
    /// Array dimensions do not match what the operation requires.
    Shape { message: String },
    /// Prototype overlap factor outside the supported set.
    UnsupportedOverlap { overlap_factor: usize },
    /// Invalid power-delay profile (bad arrays, excessive delay spread).
    Profile { message: String },
    /// Scalar argument outside its admissible range.
    Range { message: String },
    /// One-tap equalization attempted on subcarriers with |H| below the
    /// deep-null guard threshold.
    SingularChannel { subcarriers: Vec<usize> },
    /// Byte stream or frame too short / malformed for the expected layout.
    FrameFormat { message: String },
    /// Preamble correlation metric below the detection threshold.
    SyncFailure { metric: f64, threshold: f64 },
    /// A chain stage failed; wraps the underlying error with the stage name.
    Stage { stage: &'static str, source: Box<Error> },
    /// Filesystem or stream I/O failure.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { line, message } => {
                write!(f, "config parse error at line {line}: {message}")
            }
            Error::Validation { key, message } => {
                write!(f, "invalid value for `{key}`: {message}")
            }
            Error::NotImplemented { feature } => {
                write!(f, "`{feature}` is not implemented")
            }
            Error::Domain { message } => write!(f, "domain error: {message}"),
            Error::Shape { message } => write!(f, "shape error: {message}"),
            Error::UnsupportedOverlap { overlap_factor } => {
                write!(f, "unsupported overlap factor {overlap_factor}, expected 2, 3 or 4")
            }
            Error::Profile { message } => write!(f, "profile error: {message}"),
            Error::Range { message } => write!(f, "range error: {message}"),
            Error::SingularChannel { subcarriers } => {
                write!(f, "channel magnitude below 1e-12 on subcarriers {subcarriers:?}")
            }
            Error::FrameFormat { message } => write!(f, "frame format error: {message}"),
            Error::SyncFailure { metric, threshold } => {
                write!(
                    f,
                    "synchronization failed: correlation metric {metric:.3} below threshold {threshold}"
                )
            }
            Error::Stage { stage, source } => write!(f, "stage `{stage}` failed: {source}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Stage { source, .. } => Some(source.as_ref()),
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

impl Error {
    /// Wraps an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// True for errors caused by the run configuration rather than execution.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Validation { .. } | Error::NotImplemented { .. }
        )
    }
}
