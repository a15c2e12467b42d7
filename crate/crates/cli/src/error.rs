use std::fmt;

/// CLI failure split by exit code: bad input (2) vs failed computation (3).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Compute(msg) => write!(f, "computation error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub fn config<E: fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

pub fn compute<E: fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}
