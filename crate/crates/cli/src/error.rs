use polariton_cmt::CmtError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("numerical failure: {0}")]
    Numerical(CmtError),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }

    /// Maps a library error raised while running a `block` of the config.
    /// Parameter errors point at the offending key; everything else is numerical.
    pub fn from_lib(block: &str, err: CmtError) -> Self {
        match err {
            CmtError::InvalidParameter { name, reason } => CliError::config(format!("{block}.{name}"), reason),
            other => CliError::Numerical(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
