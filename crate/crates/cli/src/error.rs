use stiffcal_core::CalibrationError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{0}")]
    Io(String),

    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

impl CliError {
    /// Process exit code: 1 usage/config, 2 unidentifiable plan, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Calibration(e) => match e {
                CalibrationError::UnidentifiablePlan { .. } => 2,
                CalibrationError::InvalidInput(_)
                | CalibrationError::NonPositiveForce(_)
                | CalibrationError::DegenerateTestPose { .. } => 1,
                CalibrationError::SingularConfiguration { .. } | CalibrationError::NoConvergence => 3,
            },
        }
    }
}

pub fn io_error(what: &str, e: std::io::Error) -> CliError {
    CliError::Io(format!("{what}: {e}"))
}
