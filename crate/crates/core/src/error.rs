use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by any stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("record {id}: referenced file is missing: {path}")]
    MissingFile { id: String, path: PathBuf },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("record {id}: {message}")]
    InvariantViolation { id: String, message: String },

    #[error("empty signal")]
    EmptySignal,

    #[error("signal too short: {got} samples, need at least {need}")]
    SignalTooShort { need: usize, got: usize },

    #[error("invalid filter spec: {0}")]
    InvalidSpec(String),

    #[error("noise power is zero")]
    ZeroNoisePower,

    #[error("signal power is zero")]
    ZeroSignalPower,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("noise bank too short: bank holds {bank} samples, record needs {record}")]
    BankTooShort { bank: usize, record: usize },

    #[error("record {id}: expected variant {expected}, got {got}")]
    VariantMismatch {
        id: String,
        expected: String,
        got: String,
    },

    #[error("record {id}: lead {lead} is not present ({leads} leads)")]
    MissingLead { id: String, lead: usize, leads: usize },

    #[error("degenerate image: {0}")]
    DegenerateImage(String),

    #[error("too few records: class {label} has {got}, need at least {need}")]
    TooFewRecords {
        label: String,
        got: usize,
        need: usize,
    },

    #[error("training set is missing class {0}")]
    MissingClass(String),

    #[error("record id sets differ across dataset variants: {0}")]
    IdMismatch(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn invariant(id: impl Into<String>, message: impl Into<String>) -> Self {
        Error::InvariantViolation {
            id: id.into(),
            message: message.into(),
        }
    }

    /// Tag an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
