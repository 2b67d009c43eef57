//! Command-line front end for the cortical morphing pipeline: run
//! configuration, grayscale image IO, frame-sequence output with a JSON
//! manifest, and the verification report.

pub mod config;
pub mod manifest;
pub mod output;
pub mod pgm;

pub use config::RunConfig;

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] cortmorph_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: byte {offset}: {message}")]
    Format { path: PathBuf, offset: usize, message: String },

    #[error("{path}:{line}: {message}")]
    Config { path: PathBuf, line: usize, message: String },

    #[error("{path}: expected a {expected}x{expected} image, got {got_w}x{got_h}")]
    ImageSize { path: PathBuf, expected: usize, got_w: usize, got_h: usize },

    #[error("{0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }
}
