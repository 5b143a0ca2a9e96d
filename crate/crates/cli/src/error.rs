use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("cannot access `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown key `{key}` in {origin}; did you mean `{suggestion}`?")]
    UnknownKey {
        key: String,
        suggestion: String,
        origin: String,
    },

    #[error("constraint violated: `{key}` {reason}")]
    Constraint { key: String, reason: String },

    #[error("runtime error: {0}")]
    Runtime(#[from] faraday_core::Error),

    #[error("selfcheck failed: {0} of {1} properties failed")]
    SelfcheckFailed(usize, usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Parse(_) | CliError::UnknownKey { .. } => 4,
            CliError::Constraint { .. } => 5,
            CliError::Runtime(_) => 6,
            CliError::SelfcheckFailed(..) => 7,
        }
    }
}
