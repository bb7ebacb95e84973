//! On-disk formats: binary PNM images and masks, ASCII PLY clouds,
//! whitespace-separated pose logs.

mod pnm;
mod ply;
mod poses;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use pnm::{
    decode_pnm, encode_gray, encode_image, read_gray, read_image, read_mask, write_gray, write_image, write_mask, GrayImage,
};
pub use ply::{parse_ply, read_ply, render_ply, write_ply};
pub use poses::{parse_poses, read_poses, render_poses, write_poses};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    /// `line` is 1-based; 0 when the position is a byte offset or unknown.
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

impl FormatError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        FormatError::Parse { path: path.to_path_buf(), line, message: message.into() }
    }
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>, FormatError> {
    std::fs::read(path).map_err(|e| FormatError::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| FormatError::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| FormatError::io(path, e))
}
