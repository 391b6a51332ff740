//! SEMB binary embeddings.
//!
//! Layout (little-endian): magic `SEMB`, version u32, dim u32, count u64,
//! dtype u8 (0 = f32), then `count * dim` f32 values. Sentence ids live in a
//! sidecar text file next to it (`<file>.ids`), one per line, in row order.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use bitext_core::embedding::{EmbeddingMatrix, NORM_TOLERANCE};

use super::{create, finish, open, read_lines};
use crate::error::{BitextError, Result};

pub const MAGIC: &[u8; 4] = b"SEMB";
pub const VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 0;
pub const HEADER_LEN: u64 = 4 + 4 + 4 + 8 + 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SembHeader {
    pub version: u32,
    pub dim: u32,
    pub count: u64,
    pub dtype: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ImportReport {
    pub count: usize,
    pub dim: usize,
    /// Rows whose norm was off by more than the tolerance and got rescaled.
    pub renormalized: usize,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".ids");
    PathBuf::from(s)
}

pub fn write_semb(path: &Path, matrix: &EmbeddingMatrix) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| BitextError::io(path, e);
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    let dim = u32::try_from(matrix.dim()).map_err(|_| BitextError::format(path, "dimension exceeds u32"))?;
    w.write_all(&dim.to_le_bytes()).map_err(io)?;
    w.write_all(&(matrix.len() as u64).to_le_bytes()).map_err(io)?;
    w.write_all(&[DTYPE_F32]).map_err(io)?;
    for x in matrix.data() {
        w.write_all(&x.to_le_bytes()).map_err(io)?;
    }
    finish(path, w)?;

    let ids = sidecar_path(path);
    let mut w = create(&ids)?;
    for id in matrix.ids() {
        if id.contains(['\n', '\r']) {
            return Err(BitextError::format(&ids, format!("sentence id contains a line break: {id:?}")));
        }
        writeln!(w, "{id}").map_err(|e| BitextError::io(&ids, e))?;
    }
    finish(&ids, w)
}

pub fn parse_header(path: &Path, bytes: &[u8]) -> Result<SembHeader> {
    if (bytes.len() as u64) < HEADER_LEN {
        return Err(BitextError::TruncatedFile {
            path: path.to_path_buf(),
            expected: HEADER_LEN,
            actual: bytes.len() as u64,
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(BitextError::format(path, format!("bad magic {:?}", &bytes[..4])));
    }
    let header = SembHeader {
        version: u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")),
        dim: u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")),
        count: u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")),
        dtype: bytes[20],
    };
    if header.version != VERSION {
        return Err(BitextError::format(path, format!("unsupported version {}", header.version)));
    }
    if header.dtype != DTYPE_F32 {
        return Err(BitextError::format(path, format!("unsupported dtype {}", header.dtype)));
    }
    if header.dim == 0 {
        return Err(BitextError::format(path, "dimension is zero"));
    }
    Ok(header)
}

/// Loads a SEMB file and its id sidecar, renormalizing rows whose norm is
/// off by more than 1e-4.
pub fn read_semb(path: &Path) -> Result<(EmbeddingMatrix, ImportReport)> {
    let mut bytes = Vec::new();
    open(path)?
        .read_to_end(&mut bytes)
        .map_err(|e| BitextError::io(path, e))?;
    let h = parse_header(path, &bytes)?;
    let expected = u64::from(h.dim)
        .checked_mul(h.count)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| BitextError::format(path, "header sizes overflow"))?;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(BitextError::TruncatedFile {
            path: path.to_path_buf(),
            expected,
            actual,
        });
    }
    if actual > expected {
        return Err(BitextError::format(
            path,
            format!("{} trailing bytes after {} rows", actual - expected, h.count),
        ));
    }
    let data: Vec<f32> = bytes[HEADER_LEN as usize..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
        .collect();
    let ids_path = sidecar_path(path);
    let ids = read_lines(&ids_path)?;
    if ids.len() as u64 != h.count {
        return Err(BitextError::format(
            &ids_path,
            format!("{} ids for {} rows", ids.len(), h.count),
        ));
    }
    let mut matrix = EmbeddingMatrix::new(ids, data, h.dim as usize)?;
    let renormalized = matrix.normalize_rows(NORM_TOLERANCE)?;
    if renormalized > 0 {
        log::warn!("{}: renormalized {renormalized} rows", path.display());
    }
    let report = ImportReport {
        count: matrix.len(),
        dim: matrix.dim(),
        renormalized,
    };
    Ok((matrix, report))
}
