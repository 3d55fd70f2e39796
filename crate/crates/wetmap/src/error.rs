use std::path::{Path, PathBuf};

use wetmap_core::geo::GeoError;
use wetmap_core::model::CheckpointError;

/// Failure reading or writing one of the on-disk formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("{}: line {line}: {msg}", path.display())]
    WorldFile { path: PathBuf, line: usize, msg: String },
    #[error("{}: {source}", path.display())]
    Geo { path: PathBuf, source: GeoError },
    #[error("{}: {detail}", path.display())]
    GeoJson { path: PathBuf, detail: String },
    #[error("{}: feature {feature}: unsupported geometry {kind:?}", path.display())]
    UnsupportedGeometry {
        path: PathBuf,
        feature: usize,
        kind: String,
    },
    #[error("{}: {source}", path.display())]
    Checkpoint { path: PathBuf, source: CheckpointError },
    #[error("{}: {msg}", path.display())]
    Config { path: PathBuf, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn format_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}
