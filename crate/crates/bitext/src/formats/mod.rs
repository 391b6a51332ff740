//! On-disk formats: documents, sentences, embeddings, indexes, pairs,
//! held-out sets, annotation files and JSON reports.

pub mod annotation;
pub mod docs;
pub mod heldout;
pub mod pairs;
pub mod semb;
pub mod sentences;
pub mod sivf;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{BitextError, Result};

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| BitextError::io(path, e))
}

/// Creates `path` and any missing parent directories.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| BitextError::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| BitextError::io(path, e))
}

pub fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| BitextError::io(path, e))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut r = open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = r.read(&mut buf).map_err(|e| BitextError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| BitextError::io(path, io::Error::other(e)))?;
    w.write_all(b"\n").map_err(|e| BitextError::io(path, e))?;
    finish(path, w)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| BitextError::format(path, e.to_string()))
}

/// Rejects fields that would break a tab-separated row.
pub(crate) fn check_field(path: &Path, field: &str) -> Result<()> {
    if field.contains(['\t', '\n', '\r']) {
        return Err(BitextError::format(
            path,
            format!("field contains a tab or line break: {field:?}"),
        ));
    }
    Ok(())
}

/// Lines of a text file without their terminators; a trailing empty line
/// is ignored.
pub(crate) fn read_lines(path: &Path) -> Result<Vec<String>> {
    let mut s = String::new();
    open(path)?
        .read_to_string(&mut s)
        .map_err(|e| BitextError::io(path, e))?;
    Ok(s.lines().map(str::to_string).collect())
}
