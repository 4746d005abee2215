use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(cohgate::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Csv(_) => 1,
        }
    }
}

impl From<cohgate::Error> for CliError {
    fn from(e: cohgate::Error) -> Self {
        use cohgate::Error::*;
        match e {
            NonPositiveDt { .. }
            | RateNegative { .. }
            | EfficiencyOutOfRange(_)
            | ThresholdOutOfRange(_)
            | InvalidParameter { .. }
            | MarginExceedsThreshold { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}
