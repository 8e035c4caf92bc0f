use std::fmt;
use std::process::ExitCode;

use genrank::Error;

/// Terminal outcome of a command other than success.
#[derive(Debug)]
pub enum Failure {
    /// Invalid flags, config or inputs.
    Usage(String),
    /// A check ran and did not hold.
    Verification(String),
    /// The capacity verdict refuses the requested fit.
    Refused(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Refused(_) => 3,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Verification(m) => write!(f, "verification failed: {m}"),
            Failure::Refused(m) => write!(f, "refused: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Refused(v) => Failure::Refused(serde_json::to_string_pretty(&*v).unwrap_or_else(|_| v.summary())),
            Error::Convergence { .. } => Failure::Verification(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("i/o: {e}"))
    }
}

pub type Outcome<T = ()> = Result<T, Failure>;
