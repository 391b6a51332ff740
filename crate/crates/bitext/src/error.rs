use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum BitextError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },
    #[error("{}: truncated file, expected {expected} bytes but found {actual}", path.display())]
    TruncatedFile { path: PathBuf, expected: u64, actual: u64 },
    #[error(transparent)]
    Core(#[from] bitext_core::Error),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("embedding provider unavailable after {attempts} attempt(s): {last}")]
    ProviderUnavailable { attempts: u32, last: String },
    #[error("embedding provider returned {got} vectors for {expected} texts")]
    PartialResponse { expected: usize, got: usize },
    #[error("embedding provider protocol error: {0}")]
    Protocol(String),
    #[error("stage {stage} failed: {source}")]
    StageFailure {
        stage: String,
        #[source]
        source: Box<BitextError>,
    },
}

pub type Result<T, E = BitextError> = std::result::Result<T, E>;

impl BitextError {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Self::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    pub fn format(path: impl AsRef<Path>, reason: impl Into<String>) -> Self {
        Self::Format {
            path: path.as_ref().to_path_buf(),
            reason: reason.into(),
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn stage(stage: &str, source: BitextError) -> Self {
        Self::StageFailure {
            stage: stage.to_string(),
            source: Box::new(source),
        }
    }

    /// 1 for configuration problems, 2 for anything that failed while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            _ => 2,
        }
    }
}
