//! CLI-level errors mapped onto process exit codes.

use std::fmt;

/// Exit codes: 0 ok, 2 usage, 3 input, 4 domain.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Domain(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Domain(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Computation errors surface as domain failures; malformed in-memory
/// inputs should have been caught by validation beforehand.
impl From<kineflow_core::Error> for CliError {
    fn from(e: kineflow_core::Error) -> Self {
        use kineflow_core::Error as E;
        match e {
            E::InvalidInput(_) | E::InvalidDimension(_) | E::MissingData(_) => {
                CliError::Input(e.to_string())
            }
            E::InvalidK { .. } | E::InvalidMethod(_) => CliError::Usage(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
