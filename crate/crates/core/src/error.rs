use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the tracking pipeline and evaluation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("inverse transform left an imaginary residue of {residue:e}")]
    NonNegligibleImaginaryPart { residue: f64 },

    #[error("spectral denominator magnitude {magnitude:e} is below 1e-12")]
    DivisionUnderflow { magnitude: f64 },

    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("every channel response maximum is non-positive")]
    AllZeroResponses,

    #[error("frame has zero pixels")]
    EmptyFrame,

    #[error("patch of {width}x{height} px is too small: {reason}")]
    PatchTooSmall {
        width: usize,
        height: usize,
        reason: &'static str,
    },

    #[error("colorname table unavailable: {0}")]
    TableMissing(String),

    #[error("histogram region contains no pixels")]
    EmptyRegion,

    #[error("degenerate bounding box: {0}")]
    DegenerateBBox(String),

    #[error("bounding box {0} lies outside the frame")]
    BBoxOutOfFrame(String),

    #[error("no ground truth found at {0}")]
    MissingGroundTruth(PathBuf),

    #[error("{frames} frames but {ground_truth} ground-truth entries")]
    FrameCountMismatch { frames: usize, ground_truth: usize },

    #[error("cannot parse line {line} of {path}: {content:?}")]
    UnparseableLine {
        path: PathBuf,
        line: usize,
        content: String,
    },

    #[error("invalid synthetic sequence spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::Image {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user-supplied configuration or input
    /// specification rather than the filesystem.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidSpec(_)
                | Error::MissingGroundTruth(_)
                | Error::DegenerateBBox(_)
                | Error::BBoxOutOfFrame(_)
        )
    }
}
