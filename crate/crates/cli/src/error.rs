use thiserror::Error;

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for runtime failures that are neither config nor statistics problems.
pub const EXIT_FAILURE: i32 = 1;
/// Exit code for unreadable or invalid configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for degenerate click statistics.
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("degenerate statistics: {0}")]
    Degenerate(clickstat_core::Error),

    #[error(transparent)]
    Core(clickstat_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl From<clickstat_core::Error> for CliError {
    fn from(err: clickstat_core::Error) -> Self {
        if err.is_degenerate() {
            CliError::Degenerate(err)
        } else {
            CliError::Core(err)
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            _ => EXIT_FAILURE,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
