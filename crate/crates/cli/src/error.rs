use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    /// `counterexample` found no gap.
    pub const NO_GAP: i32 = 1;
    pub const PARAMETER: i32 = 2;
    pub const INFEASIBLE: i32 = 3;
    pub const NON_CONVERGENCE: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] keydist::Error),

    /// A config value failed to parse or validate; `path` is the dotted field path.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl ToString) -> CliError {
        CliError::Config {
            path: path.into(),
            message: message.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(keydist::Error::Infeasible(_)) => exit::INFEASIBLE,
            CliError::Core(keydist::Error::Truncation(_)) => exit::NON_CONVERGENCE,
            _ => exit::PARAMETER,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
