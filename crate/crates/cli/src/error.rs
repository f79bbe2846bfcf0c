use std::fmt;
use std::process::ExitCode;

/// Failure classes with stable exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Data,
}

impl Kind {
    pub fn exit_code(self) -> ExitCode {
        match self {
            Kind::Config => ExitCode::from(1),
            Kind::Data => ExitCode::from(2),
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub source: anyhow::Error,
}

impl CliError {
    pub fn config(source: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: Kind::Config,
            source: source.into(),
        }
    }

    pub fn data(source: impl Into<anyhow::Error>) -> Self {
        Self {
            kind: Kind::Data,
            source: source.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

impl From<latla::Error> for CliError {
    fn from(e: latla::Error) -> Self {
        if e.is_data_error() {
            Self::data(e)
        } else {
            Self::config(e)
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
