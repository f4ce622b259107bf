use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::io::ImageIoError;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Image(#[from] ImageIoError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("alignment failed: {0}")]
    Align(mtb_align::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Image(_) | CliError::Io { .. } => EXIT_IO,
            CliError::Align(e) => match e {
                mtb_align::Error::Invariant(_) | mtb_align::Error::ThreadPool(_) => EXIT_INTERNAL,
                _ => EXIT_USAGE,
            },
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<mtb_align::Error> for CliError {
    fn from(e: mtb_align::Error) -> Self {
        CliError::Align(e)
    }
}
