//! Host side of the cybersickness assessment engine: file formats, bundled
//! content, the preset store, the `csaf` command line and the HTTP gateway.

use std::path::PathBuf;

pub mod artifacts;
pub mod bundled;
pub mod cli;
pub mod experiment;
pub mod formats;
pub mod gateway;
pub mod report;
pub mod store;

/// Failure to read or resolve a scene, plan or other input file.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Parse(PathBuf, String),
    #[error("{0}")]
    Invalid(String),
}
