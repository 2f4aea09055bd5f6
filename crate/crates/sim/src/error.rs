use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(
        "unknown scenario `{0}` (expected diss.fixed, diss.diff, diss.close, diss.far, coll.close, coll.far or custom)"
    )]
    UnknownScenario(String),
    #[error("unknown protocol `{0}` (expected whisper, whisper-lazy, whisper-compliant, glossy or glossy-2b)")]
    UnknownProtocol(String),
    #[error("unknown check suite `{0}`")]
    UnknownSuite(String),
    #[error("cannot read topology {path}: {source}")]
    TopologyRead { path: PathBuf, source: std::io::Error },
    #[error("topology line {line}: {msg}")]
    TopologyParse { line: usize, msg: String },
    #[error("scenario line {line}: {msg}")]
    ScenarioParse { line: usize, msg: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] whisper_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SimError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            SimError::UnknownScenario(_) => 2,
            SimError::TopologyRead { .. } | SimError::TopologyParse { .. } => 3,
            _ => 1,
        }
    }
}
