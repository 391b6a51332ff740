//! Pair TSV: `src_id \t tgt_id \t src_text \t tgt_text \t las \t mode \t bucket`,
//! no header. Pivot files append the provenance of both constituent pairs.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use bitext_core::corpus::SentenceRecord;
use bitext_core::embedding::LasScore;
use bitext_core::lang::LanguageCode;
use bitext_core::mine::CandidatePair;
use bitext_core::refine::{MinedPair, PivotPair, Provenance};

use super::{check_field, create, finish, open};
use crate::error::{BitextError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub src_id: String,
    pub tgt_id: String,
    pub src_text: String,
    pub tgt_text: String,
    pub las: f64,
    pub mode: String,
    pub bucket: String,
}

impl PairRow {
    pub fn from_mined(p: &MinedPair) -> Self {
        Self {
            src_id: p.src_id.clone(),
            tgt_id: p.tgt_id.clone(),
            src_text: p.src_text.clone(),
            tgt_text: p.tgt_text.clone(),
            las: p.las.value(),
            mode: p.provenance.mode.clone(),
            bucket: p.provenance.bucket.clone(),
        }
    }

    pub fn into_mined(self, src_lang: &LanguageCode, tgt_lang: &LanguageCode, source: &str) -> MinedPair {
        MinedPair {
            src_id: self.src_id,
            tgt_id: self.tgt_id,
            src_lang: src_lang.clone(),
            tgt_lang: tgt_lang.clone(),
            src_text: self.src_text,
            tgt_text: self.tgt_text,
            las: LasScore(self.las),
            provenance: Provenance {
                source: source.to_string(),
                mode: self.mode,
                bucket: self.bucket,
            },
        }
    }
}

/// Attaches sentence texts to mined candidates.
pub fn candidate_rows(
    candidates: &[CandidatePair],
    src: &[SentenceRecord],
    tgt: &[SentenceRecord],
) -> Result<Vec<PairRow>> {
    let src_text: HashMap<&str, &str> = src.iter().map(|r| (r.sent_id.as_str(), r.text.as_str())).collect();
    let tgt_text: HashMap<&str, &str> = tgt.iter().map(|r| (r.sent_id.as_str(), r.text.as_str())).collect();
    candidates
        .iter()
        .map(|c| {
            let lookup = |m: &HashMap<&str, &str>, id: &str| -> Result<String> {
                m.get(id)
                    .map(|t| t.to_string())
                    .ok_or_else(|| bitext_core::Error::UnknownId(id.to_string()).into())
            };
            Ok(PairRow {
                src_id: c.src_id.clone(),
                tgt_id: c.tgt_id.clone(),
                src_text: lookup(&src_text, &c.src_id)?,
                tgt_text: lookup(&tgt_text, &c.tgt_id)?,
                las: c.las.value(),
                mode: c.mode.as_str().to_string(),
                bucket: c.bucket.clone(),
            })
        })
        .collect()
}

fn write_row(w: &mut impl Write, path: &Path, r: &PairRow, extra: &[&str]) -> Result<()> {
    for f in [&r.src_id, &r.tgt_id, &r.src_text, &r.tgt_text, &r.mode, &r.bucket] {
        check_field(path, f)?;
    }
    write!(
        w,
        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
        r.src_id, r.tgt_id, r.src_text, r.tgt_text, r.las, r.mode, r.bucket
    )
    .map_err(|e| BitextError::io(path, e))?;
    for f in extra {
        check_field(path, f)?;
        write!(w, "\t{f}").map_err(|e| BitextError::io(path, e))?;
    }
    writeln!(w).map_err(|e| BitextError::io(path, e))
}

pub fn write_pairs(path: &Path, rows: &[PairRow]) -> Result<()> {
    let mut w = create(path)?;
    for r in rows {
        write_row(&mut w, path, r, &[])?;
    }
    finish(path, w)
}

pub fn read_pairs(path: &Path) -> Result<Vec<PairRow>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| BitextError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let bad = |why: String| BitextError::format(path, format!("line {}: {why}", i + 1));
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 7 {
            return Err(bad(format!("expected 7 columns, found {}", cols.len())));
        }
        out.push(PairRow {
            src_id: cols[0].to_string(),
            tgt_id: cols[1].to_string(),
            src_text: cols[2].to_string(),
            tgt_text: cols[3].to_string(),
            las: cols[4].parse().map_err(|_| bad(format!("bad score {:?}", cols[4])))?,
            mode: cols[5].to_string(),
            bucket: cols[6].to_string(),
        });
    }
    Ok(out)
}

pub fn write_mined(path: &Path, pairs: &[MinedPair]) -> Result<()> {
    let rows: Vec<PairRow> = pairs.iter().map(PairRow::from_mined).collect();
    write_pairs(path, &rows)
}

pub fn read_mined(path: &Path, src_lang: &LanguageCode, tgt_lang: &LanguageCode, source: &str) -> Result<Vec<MinedPair>> {
    Ok(read_pairs(path)?
        .into_iter()
        .map(|r| r.into_mined(src_lang, tgt_lang, source))
        .collect())
}

/// Pair columns, then `left_source left_mode left_bucket right_source
/// right_mode right_bucket`.
pub fn write_pivot(path: &Path, pairs: &[PivotPair]) -> Result<()> {
    let mut w = create(path)?;
    for p in pairs {
        let (l, r) = (&p.left, &p.right);
        let extra = [
            l.source.as_str(),
            &l.mode,
            &l.bucket,
            &r.source,
            &r.mode,
            &r.bucket,
        ];
        write_row(&mut w, path, &PairRow::from_mined(&p.pair), &extra)?;
    }
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("p.tsv");
        let rows = vec![PairRow {
            src_id: "a:0".into(),
            tgt_id: "b:0".into(),
            src_text: "Hello there".into(),
            tgt_text: "नमस्ते".into(),
            las: 0.812_345_678_901_234_5,
            mode: "comparable".into(),
            bucket: "month:2020-01".into(),
        }];
        write_pairs(&p, &rows).unwrap();
        assert_eq!(read_pairs(&p).unwrap(), rows);
    }

    #[test]
    fn rejects_tabs_in_text() {
        let dir = tempfile::tempdir().unwrap();
        let row = PairRow {
            src_id: "a".into(),
            tgt_id: "b".into(),
            src_text: "x\ty".into(),
            tgt_text: "z".into(),
            las: 0.9,
            mode: "docpair".into(),
            bucket: "document_pair:k".into(),
        };
        assert!(write_pairs(&dir.path().join("p.tsv"), &[row]).is_err());
    }
}
