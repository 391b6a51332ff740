//! JSON-lines documents, one `SourceDocument` per line.

use std::io::{BufRead, Write};
use std::path::Path;

use bitext_core::corpus::SourceDocument;

use super::{create, finish, open};
use crate::error::{BitextError, Result};

pub fn read_documents(path: &Path) -> Result<Vec<SourceDocument>> {
    let mut docs = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| BitextError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = serde_json::from_str(&line)
            .map_err(|e| BitextError::format(path, format!("line {}: {e}", i + 1)))?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn write_documents(path: &Path, docs: &[SourceDocument]) -> Result<()> {
    let mut w = create(path)?;
    for d in docs {
        let line = serde_json::to_string(d).expect("documents serialize");
        writeln!(w, "{line}").map_err(|e| BitextError::io(path, e))?;
    }
    finish(path, w)
}
