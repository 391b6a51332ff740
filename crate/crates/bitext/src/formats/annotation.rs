//! Annotation CSVs.
//!
//! The export shown to annotators carries `sample_id, batch_id, src_text,
//! tgt_text`; bands and scores go to a separate key file. Collected
//! judgements come back as `sample_id, annotator_id, sts`.

use std::path::Path;

use bitext_core::eval::{Annotation, AnnotationSample, LasBand, SampleKey, StsScore};
use serde::{Deserialize, Serialize};

use super::{create, open};
use crate::error::{BitextError, Result};

#[derive(Debug, Serialize, Deserialize)]
struct ExportRow<'a> {
    sample_id: &'a str,
    batch_id: usize,
    src_text: &'a str,
    tgt_text: &'a str,
}

#[derive(Debug, Serialize, Deserialize)]
struct KeyRow {
    sample_id: String,
    batch_id: usize,
    band: String,
    las: f64,
    language: String,
    en_words: usize,
    src_id: String,
    tgt_id: String,
}

#[derive(Debug, Deserialize)]
struct ImportRow {
    sample_id: String,
    annotator_id: String,
    sts: u8,
}

fn csv_err(path: &Path, e: csv::Error) -> BitextError {
    BitextError::format(path, e.to_string())
}

fn writer(path: &Path) -> Result<csv::Writer<std::io::BufWriter<std::fs::File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

pub fn write_export(path: &Path, samples: &[AnnotationSample]) -> Result<()> {
    let mut w = writer(path)?;
    for s in samples {
        w.serialize(ExportRow {
            sample_id: &s.sample_id,
            batch_id: s.batch_id,
            src_text: &s.pair.src_text,
            tgt_text: &s.pair.tgt_text,
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| BitextError::io(path, e))
}

pub fn write_key(path: &Path, samples: &[AnnotationSample]) -> Result<()> {
    let mut w = writer(path)?;
    for s in samples {
        let k = s.key();
        w.serialize(KeyRow {
            sample_id: k.sample_id,
            batch_id: k.batch_id,
            band: k.band.to_string(),
            las: k.las,
            language: k.language,
            en_words: k.en_words,
            src_id: s.pair.src_id.clone(),
            tgt_id: s.pair.tgt_id.clone(),
        })
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| BitextError::io(path, e))
}

pub fn read_key(path: &Path) -> Result<Vec<SampleKey>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    r.deserialize::<KeyRow>()
        .map(|row| {
            let row = row.map_err(|e| csv_err(path, e))?;
            Ok(SampleKey {
                sample_id: row.sample_id,
                batch_id: row.batch_id,
                band: row.band.parse::<LasBand>()?,
                las: row.las,
                language: row.language,
                en_words: row.en_words,
            })
        })
        .collect()
}

pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    r.deserialize::<ImportRow>()
        .map(|row| {
            let row = row.map_err(|e| csv_err(path, e))?;
            Ok(Annotation {
                sample_id: row.sample_id,
                annotator_id: row.annotator_id,
                sts: StsScore::new(row.sts)?,
            })
        })
        .collect()
}
