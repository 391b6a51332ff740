//! SIVF index files.
//!
//! Layout (little-endian): magic `SIVF`, version u32, d u32, K u32, m u32,
//! residual u8, K·d f32 centroids, m·256·(d/m) f32 codebooks, then K
//! inverted lists (length u64, then per entry an id-table offset u64 and m
//! code bytes), then the id table (count u64, then per id a u32 byte length
//! and UTF-8 bytes).

use std::io::{Read, Write};
use std::path::Path;

use bitext_core::ivf::{CoarseQuantizer, InvertedList, IvfPqIndex};
use bitext_core::pq::{ProductQuantizer, CODEBOOK_SIZE};

use super::{create, finish, open};
use crate::error::{BitextError, Result};

pub const MAGIC: &[u8; 4] = b"SIVF";
pub const VERSION: u32 = 1;

pub fn write_index(path: &Path, index: &IvfPqIndex) -> Result<()> {
    let mut w = create(path)?;
    let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| BitextError::io(path, e));
    let u32_of = |n: usize| {
        u32::try_from(n).map_err(|_| BitextError::format(path, format!("{n} exceeds u32")))
    };
    put(MAGIC)?;
    put(&VERSION.to_le_bytes())?;
    put(&u32_of(index.dim())?.to_le_bytes())?;
    put(&u32_of(index.clusters())?.to_le_bytes())?;
    put(&u32_of(index.subspaces())?.to_le_bytes())?;
    put(&[u8::from(index.residual())])?;
    for x in index.coarse().centroids().iter().chain(index.pq().codebooks()) {
        put(&x.to_le_bytes())?;
    }
    for list in index.lists() {
        put(&(list.len() as u64).to_le_bytes())?;
        for (off, code) in list.offsets.iter().zip(list.codes.chunks_exact(index.subspaces())) {
            put(&off.to_le_bytes())?;
            put(code)?;
        }
    }
    put(&(index.ids().len() as u64).to_le_bytes())?;
    for id in index.ids() {
        put(&u32_of(id.len())?.to_le_bytes())?;
        put(id.as_bytes())?;
    }
    finish(path, w)
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(BitextError::TruncatedFile {
                path: self.path.to_path_buf(),
                expected: (self.pos as u64).saturating_add(n as u64),
                actual: self.bytes.len() as u64,
            });
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        usize::try_from(n).map_err(|_| BitextError::format(self.path, format!("length {n} too large")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| BitextError::format(self.path, "size overflow"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect())
    }
}

pub fn read_index(path: &Path) -> Result<IvfPqIndex> {
    let mut bytes = Vec::new();
    open(path)?
        .read_to_end(&mut bytes)
        .map_err(|e| BitextError::io(path, e))?;
    let mut c = Cursor {
        path,
        bytes: &bytes,
        pos: 0,
    };
    if c.take(4)? != MAGIC {
        return Err(BitextError::format(path, "bad magic"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(BitextError::format(path, format!("unsupported version {version}")));
    }
    let d = c.u32()? as usize;
    let k = c.u32()? as usize;
    let m = c.u32()? as usize;
    let residual = match c.take(1)?[0] {
        0 => false,
        1 => true,
        other => return Err(BitextError::format(path, format!("bad residual flag {other}"))),
    };
    if d == 0 || k == 0 || m == 0 || !d.is_multiple_of(m) {
        return Err(BitextError::format(path, format!("bad shape d={d} K={k} m={m}")));
    }
    let coarse = CoarseQuantizer::from_centroids(d, c.f32s(k * d)?)?;
    let pq = ProductQuantizer::from_codebooks(d, m, c.f32s(m * CODEBOOK_SIZE * (d / m))?)?;
    let mut lists = Vec::with_capacity(k);
    for _ in 0..k {
        let n = c.len()?;
        let mut list = InvertedList::default();
        for _ in 0..n {
            list.offsets.push(c.u64()?);
            list.codes.extend_from_slice(c.take(m)?);
        }
        lists.push(list);
    }
    let count = c.len()?;
    let mut ids = Vec::with_capacity(count.min(bytes.len()));
    for _ in 0..count {
        let n = c.u32()? as usize;
        let raw = c.take(n)?;
        ids.push(
            String::from_utf8(raw.to_vec())
                .map_err(|_| BitextError::format(path, "id is not UTF-8"))?,
        );
    }
    if c.pos != bytes.len() {
        return Err(BitextError::format(path, "trailing bytes after id table"));
    }
    Ok(IvfPqIndex::from_parts(coarse, pq, residual, lists, ids)?)
}
