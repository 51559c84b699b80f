use thiserror::Error;

/// Error type shared by all modules. Variants map onto process exit codes:
/// input/config problems exit 2, numerical failures exit 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// Importance-sampling stage produced too few effective samples.
    #[error("calibration error: effective sample size {ess:.1} < {min_ess} (logistic proposal scale {scale}); increase n_importance_proposals or adjust the scale")]
    Calibration { ess: f64, min_ess: f64, scale: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Exit code for the CLI: 2 = bad input, 3 = numerical trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Config(_) => 2,
            Error::Numerical(_) | Error::Calibration { .. } => 3,
            Error::Io(_) | Error::Serde(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
