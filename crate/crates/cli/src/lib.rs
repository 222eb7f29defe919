//! File handling and report assembly behind the `ks` binary.

pub mod report;
pub mod table;

use std::path::{Path, PathBuf};

use ks_core::{CatalogError, KsSetRecord, Tolerance};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Catalog {
        path: PathBuf,
        #[source]
        source: CatalogError,
    },
}

pub fn load_set(path: &Path) -> Result<KsSetRecord, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })?;
    KsSetRecord::parse(&text).map_err(|source| LoadError::Catalog {
        path: path.to_owned(),
        source,
    })
}

/// Knobs shared by every analysis command.
#[derive(Debug, Clone, Copy, Default)]
pub struct Settings {
    pub tolerance: Tolerance,
    pub seed: u64,
    pub basis_index: usize,
    pub timing: bool,
}
