use hmin_core::expr::ExprError;
use hmin_core::gallery::GalleryError;
use thiserror::Error;

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum ExitStatus {
    Pass = 0,
    CheckFailed = 1,
    SpecError = 2,
    CharacteristicStart = 3,
    UnknownName = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("spec error: {0}")]
    Spec(String),
    #[error("expression `{src}`: {source}")]
    Expr { src: String, source: ExprError },
    #[error("characteristic start point: {0}")]
    CharacteristicStart(String),
    #[error("unknown gallery entry `{0}`")]
    UnknownName(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn spec(msg: impl Into<String>) -> Self {
        CliError::Spec(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }

    pub fn status(&self) -> ExitStatus {
        match self {
            CliError::Spec(_) | CliError::Expr { .. } | CliError::Io { .. } => ExitStatus::SpecError,
            CliError::CharacteristicStart(_) => ExitStatus::CharacteristicStart,
            CliError::UnknownName(_) => ExitStatus::UnknownName,
        }
    }
}

impl From<GalleryError> for CliError {
    fn from(e: GalleryError) -> Self {
        match e {
            GalleryError::UnknownName(n) => CliError::UnknownName(n),
            other => CliError::Spec(other.to_string()),
        }
    }
}
