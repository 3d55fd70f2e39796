use std::fs;
use std::path::Path;

use wetmap_core::model::Checkpoint;

use crate::error::{io_err, Error, Result};

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    fs::write(path, checkpoint.encode()).map_err(io_err(path))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Checkpoint::decode(&bytes).map_err(|source| Error::Checkpoint {
        path: path.to_path_buf(),
        source,
    })
}
