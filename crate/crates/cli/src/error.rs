use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config values (exit code 2).
    Validation(String),
    /// The numerical core refused (exit code 2) or failed (exit code 3).
    Numerical(honeycomb_bath::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            // the core rejected a parameter the config layer cannot check
            CliError::Numerical(
                honeycomb_bath::Error::InvalidParameter(_) | honeycomb_bath::Error::DiracPointOnGrid(_),
            ) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<honeycomb_bath::Error> for CliError {
    fn from(e: honeycomb_bath::Error) -> Self {
        CliError::Numerical(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
