//! File formats, data sources and the `evinf` command-line tool built on
//! [`evinf_core`].

pub mod cli;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod sources;

use std::path::{Path, PathBuf};

pub use error::{CliError, Result};

/// Relative input paths are resolved against this directory when set.
pub const DATA_ROOT_ENV: &str = "EVINF_DATA_ROOT";

/// `path` joined onto the data root when it is relative and the root is set.
pub fn resolve_input(path: &Path) -> PathBuf {
    match std::env::var_os(DATA_ROOT_ENV) {
        Some(root) if path.is_relative() && !root.is_empty() => Path::new(&root).join(path),
        _ => path.to_path_buf(),
    }
}
