use std::fmt;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Where in the config file a problem was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.field) {
            (Some(l), Some(k)) => write!(f, "line {l}, field `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "field `{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(ConfigError),
    #[error(transparent)]
    Core(#[from] snoise_core::Error),
    #[error("need at least {need} paths, got {got}")]
    TooFewPaths { need: usize, got: usize },
    #[error("{0}")]
    InvalidInput(&'static str),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(line: Option<usize>, field: Option<&str>, message: impl Into<String>) -> Self {
        Error::Config(ConfigError {
            line,
            field: field.map(str::to_owned),
            message: message.into(),
        })
    }

    /// Stable, machine-readable name printed on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Config(_) => "ConfigError",
            Error::Core(e) => e.name(),
            Error::TooFewPaths { .. } => "TooFewPaths",
            Error::InvalidInput(_) => "InvalidInput",
            Error::Io(_) => "IoError",
            Error::Csv(_) => "CsvError",
        }
    }

    /// 2 for configuration problems, 3 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }
}
