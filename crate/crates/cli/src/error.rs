use std::path::PathBuf;

use crate::config::ConfigIssue;

/// Exit status categories.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_MISMATCH: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(ConfigIssue),

    #[error("{stage}: {source}")]
    Numerical {
        stage: &'static str,
        #[source]
        source: clockinterf::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest verification failed for {}", files.join(", "))]
    DigestMismatch { files: Vec<String> },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical { .. } => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
            CliError::DigestMismatch { .. } => EXIT_VERIFY_MISMATCH,
        }
    }
}

/// Tags a core error with the pipeline stage that raised it.
pub(crate) fn stage(name: &'static str) -> impl Fn(clockinterf::Error) -> CliError {
    move |source| CliError::Numerical {
        stage: name,
        source,
    }
}
