use std::fmt;
use std::process::ExitCode;

/// A command failure, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Invalid flags or parameter combinations (exit 2).
    Usage(String),
    /// A Karel program crashed, or any other failure of the work itself (exit 1).
    Domain(anyhow::Error),
    /// Generation could not make progress within its budget (exit 3).
    Stall(String),
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure::Usage(msg.into())
    }

    pub fn stall(msg: impl Into<String>) -> Self {
        Failure::Stall(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Stall(_) => 3,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Domain(e) => write!(f, "{e:#}"),
            Failure::Stall(m) => write!(f, "stalled: {m}"),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Domain(e.into())
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;
