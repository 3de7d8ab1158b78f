use std::fmt;
use std::process::ExitCode;

use swipt_harq::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or parameters. Exit code 1.
    Config(String),
    /// A reproduction check failed. Exit code 2.
    Deviation(String),
    /// Solver, simulator or I/O failure. Exit code 3.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 1,
            CliError::Deviation(_) => 2,
            CliError::Runtime(_) => 3,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => f.write_str(msg),
            CliError::Deviation(msg) => write!(f, "reproduction deviates: {msg}"),
            CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::Config(_)
            | Error::InfeasibleChannel(_)
            | Error::DegenerateChain { .. }
            | Error::AbsorbingStart
            | Error::InsufficientEnergy { .. } => CliError::Config(err.to_string()),
            _ => CliError::Runtime(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(err.to_string())
    }
}
