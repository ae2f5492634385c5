use std::path::PathBuf;

/// How a run ended, as seen by the shell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    /// The computation finished but its check did not pass.
    Failed,
    DefectTooLarge,
    Stalled,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Passed => 0,
            Status::Failed => 1,
            Status::DefectTooLarge => 2,
            Status::Stalled => 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("run failed: {0}")]
    Run(String),
}

impl LabError {
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) | LabError::Read { .. } => 4,
            LabError::Write { .. } | LabError::Run(_) => 1,
        }
    }
}

pub(crate) fn config_err(e: impl std::fmt::Display) -> LabError {
    LabError::Config(e.to_string())
}

pub(crate) fn run_err(e: impl std::fmt::Display) -> LabError {
    LabError::Run(e.to_string())
}
