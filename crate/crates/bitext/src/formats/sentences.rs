//! Sentence TSV: `sent_id \t lang \t bucket \t text`, no header.
//!
//! The bucket column holds `kind:value`, e.g. `month:2021-03`.

use std::io::{BufRead, Write};
use std::path::Path;

use bitext_core::corpus::{BucketKey, SentenceRecord};
use bitext_core::lang::LanguageCode;

use super::{check_field, create, finish, open};
use crate::error::{BitextError, Result};

pub fn write_sentences(path: &Path, records: &[SentenceRecord]) -> Result<()> {
    let mut w = create(path)?;
    for r in records {
        for f in [&r.sent_id, &r.text] {
            check_field(path, f)?;
        }
        writeln!(w, "{}\t{}\t{}\t{}", r.sent_id, r.lang.as_str(), r.bucket, r.text)
            .map_err(|e| BitextError::io(path, e))?;
    }
    finish(path, w)
}

pub fn read_sentences(path: &Path) -> Result<Vec<SentenceRecord>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| BitextError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let bad = |why: String| BitextError::format(path, format!("line {}: {why}", i + 1));
        let cols: Vec<&str> = line.splitn(4, '\t').collect();
        let [sent_id, lang, bucket, text] = cols[..] else {
            return Err(bad(format!("expected 4 columns, found {}", cols.len())));
        };
        let doc_id = sent_id
            .rsplit_once(':')
            .map_or(sent_id, |(d, _)| d)
            .to_string();
        out.push(SentenceRecord {
            sent_id: sent_id.to_string(),
            doc_id,
            lang: LanguageCode::new(lang).map_err(|e| bad(e.to_string()))?,
            text: text.to_string(),
            bucket: bucket.parse::<BucketKey>().map_err(|e| bad(e.to_string()))?,
        });
    }
    Ok(out)
}
