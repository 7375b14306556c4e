use ftgap::ErrorClass;

/// Failure of a CLI run, mapped to a process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Numeric(_) => "numeric",
        }
    }

    /// One-line JSON record for stderr.
    pub fn to_line(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<ftgap::Error> for CliError {
    fn from(e: ftgap::Error) -> Self {
        match e {
            // parameters come from flags or the config file
            ftgap::Error::InvalidParameter { .. } => CliError::Usage(e.to_string()),
            _ => match e.class() {
                ErrorClass::Data => CliError::Data(e.to_string()),
                ErrorClass::Numeric => CliError::Numeric(e.to_string()),
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(format!("csv error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(format!("json error: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
