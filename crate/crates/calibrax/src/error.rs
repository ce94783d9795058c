use std::path::PathBuf;

use thiserror::Error;

/// Error type shared by the whole toolkit.
///
/// Every variant carries a stable machine-readable code (see [`Error::code`])
/// so the CLI can surface failures in a parsable one-line form.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("confidence {value} outside [0,1] at line {line}")]
    ConfidenceOutOfRange { value: f64, line: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid bin count {bins} for {samples} samples")]
    InvalidBinCount { bins: usize, samples: usize },

    #[error("binning scheme was built for {scheme} samples, dataset has {dataset}")]
    SchemeMismatch { scheme: usize, dataset: usize },

    #[error("moment fit degenerate: {0}")]
    DegenerateMomentFit(String),

    #[error("no curve information: dataset has constant confidence and constant hit")]
    NoCurveInformation,

    #[error("objective non-finite at every start point")]
    NonFiniteObjective,

    #[error("non-finite value while {0}")]
    NonFinite(String),

    #[error("both hit classes must be present")]
    SingleClassData,

    #[error("all paired differences are zero")]
    AllZeroDifferences,

    #[error("insufficient n: {0}")]
    InsufficientData(String),

    #[error("calibration map of kind {kind} cannot be applied to {input}")]
    IncompatibleMap { kind: String, input: String },
}

impl Error {
    /// Stable error code used in CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E_IO",
            Error::Parse { .. } => "E_PARSE",
            Error::EmptyDataset => "E_EMPTY",
            Error::ConfidenceOutOfRange { .. } => "E_RANGE",
            Error::InvalidParameter(_) => "E_PARAM",
            Error::InvalidBinCount { .. } => "E_BINS",
            Error::SchemeMismatch { .. } => "E_SCHEME",
            Error::DegenerateMomentFit(_) => "E_DEGENERATE",
            Error::NoCurveInformation => "E_NO_SIGNAL",
            Error::NonFiniteObjective => "E_NONFINITE",
            Error::NonFinite(_) => "E_NONFINITE",
            Error::SingleClassData => "E_SINGLE_CLASS",
            Error::AllZeroDifferences => "E_ZERO_DIFF",
            Error::InsufficientData(_) => "E_TOO_FEW",
            Error::IncompatibleMap { .. } => "E_INCOMPATIBLE",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
