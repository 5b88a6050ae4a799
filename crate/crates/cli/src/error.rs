use thiserror::Error;

/// Failure classes of the driver, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(layersolve::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } | CliError::Output(_) => 2,
        }
    }
}

impl From<layersolve::Error> for CliError {
    fn from(e: layersolve::Error) -> Self {
        use layersolve::Error as E;
        match e {
            E::ConfigInfeasible(m) | E::RegionEmpty(m) => CliError::Config(m),
            other => CliError::Numerical(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
