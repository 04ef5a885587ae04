//! Input and usage errors; every variant maps to exit code 2.

/// Failures that prevent a computation from starting.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("invalid instance: {0}")]
    Invalid(#[from] modcp_core::Error),

    #[error("usage: {0}")]
    Usage(String),
}

/// All checks passed.
pub const EXIT_PASS: u8 = 0;
/// A mathematical check failed.
pub const EXIT_FAIL: u8 = 1;
/// Input or usage error.
pub const EXIT_INPUT: u8 = 2;
