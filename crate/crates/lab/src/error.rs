use std::io;

/// Errors of the lab crate; each maps to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] repulsion_core::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("simulation error: {0}")]
    Simulation(String),
    #[error("infeasible Monte Carlo run: {0}")]
    Infeasible(String),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// 2 usage or bad input, 3 solver or numeric failure, 4 infeasible Monte Carlo, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Usage(_) | LabError::Domain(_) => 2,
            LabError::Core(_) | LabError::Simulation(_) => 3,
            LabError::Infeasible(_) => 4,
            LabError::Io(_) | LabError::Csv(_) | LabError::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
