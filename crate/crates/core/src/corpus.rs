//! Documents, sentence records and bucketing.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::lang::{LanguageCode, LanguageSet};
use crate::segment::Segmenter;

/// One extracted document. Exactly one of `text` and `pages` is set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SourceDocument {
    pub doc_id: String,
    pub lang: String,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub text: Option<String>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub source: String,
    /// Calendar date, `YYYY-MM-DD` (a bare `YYYY-MM` is accepted).
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub published: Option<String>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub pair_key: Option<String>,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub pages: Option<Vec<String>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BucketKind {
    Month,
    DocumentPair,
    Global,
}

impl BucketKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BucketKind::Month => "month",
            BucketKind::DocumentPair => "document_pair",
            BucketKind::Global => "global",
        }
    }
}

impl FromStr for BucketKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "month" => Ok(BucketKind::Month),
            "document_pair" | "docpair" => Ok(BucketKind::DocumentPair),
            "global" => Ok(BucketKind::Global),
            other => Err(format!("unknown bucket kind `{other}`")),
        }
    }
}

/// Candidate-restriction key: sentences only align within one bucket.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BucketKey {
    kind: BucketKind,
    value: String,
}

impl BucketKey {
    pub fn global() -> Self {
        Self {
            kind: BucketKind::Global,
            value: "*".to_string(),
        }
    }

    /// Month bucket from a `YYYY-MM` or `YYYY-MM-DD` date.
    pub fn month(date: &str) -> Option<Self> {
        parse_month(date).map(|value| Self {
            kind: BucketKind::Month,
            value,
        })
    }

    pub fn document_pair(key: &str) -> Option<Self> {
        let key = key.trim();
        (!key.is_empty()).then(|| Self {
            kind: BucketKind::DocumentPair,
            value: key.to_string(),
        })
    }

    pub fn kind(&self) -> BucketKind {
        self.kind
    }

    pub fn value(&self) -> &str {
        &self.value
    }
}

/// Rendered as `kind:value`, e.g. `month:2021-01`.
impl fmt::Display for BucketKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.as_str(), self.value)
    }
}

impl FromStr for BucketKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| format!("bucket `{s}` is not of the form kind:value"))?;
        let kind: BucketKind = kind.parse()?;
        let key = match kind {
            BucketKind::Month => BucketKey::month(value),
            BucketKind::DocumentPair => BucketKey::document_pair(value),
            BucketKind::Global => (value == "*").then(BucketKey::global),
        };
        key.ok_or_else(|| format!("invalid {} bucket value `{value}`", kind.as_str()))
    }
}

fn parse_month(date: &str) -> Option<String> {
    let mut parts = date.trim().split('-');
    let year = parts.next()?;
    let month = parts.next()?;
    let day = parts.next();
    if parts.next().is_some() || year.len() != 4 || month.len() != 2 {
        return None;
    }
    if !year.bytes().chain(month.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let m: u32 = month.parse().ok()?;
    if !(1..=12).contains(&m) {
        return None;
    }
    if let Some(day) = day {
        let d: u32 = day.parse().ok()?;
        if day.len() != 2 || !(1..=31).contains(&d) {
            return None;
        }
    }
    Some(format!("{year}-{month}"))
}

/// One segmented sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRecord {
    pub sent_id: String,
    pub doc_id: String,
    pub lang: LanguageCode,
    pub text: String,
    pub bucket: BucketKey,
}

/// Why a document produced no records.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum IngestError {
    MissingMetadata { doc_id: String, field: String },
    InvalidMetadata { doc_id: String, field: String, value: String },
    UnregisteredLanguage { doc_id: String, lang: String },
    InvalidDocument { doc_id: String, reason: String },
    DuplicateDocument { doc_id: String },
}

impl IngestError {
    pub fn doc_id(&self) -> &str {
        match self {
            IngestError::MissingMetadata { doc_id, .. }
            | IngestError::InvalidMetadata { doc_id, .. }
            | IngestError::UnregisteredLanguage { doc_id, .. }
            | IngestError::InvalidDocument { doc_id, .. }
            | IngestError::DuplicateDocument { doc_id } => doc_id,
        }
    }
}

pub fn sentence_id(doc_id: &str, index: usize) -> String {
    format!("{doc_id}:{index}")
}

fn bucket_for(doc: &SourceDocument, kind: BucketKind) -> Result<BucketKey, IngestError> {
    let missing = |field: &str| IngestError::MissingMetadata {
        doc_id: doc.doc_id.clone(),
        field: field.to_string(),
    };
    match kind {
        BucketKind::Global => Ok(BucketKey::global()),
        BucketKind::Month => {
            let date = doc.published.as_deref().ok_or_else(|| missing("published"))?;
            BucketKey::month(date).ok_or_else(|| IngestError::InvalidMetadata {
                doc_id: doc.doc_id.clone(),
                field: "published".to_string(),
                value: date.to_string(),
            })
        }
        BucketKind::DocumentPair => doc
            .pair_key
            .as_deref()
            .and_then(BucketKey::document_pair)
            .ok_or_else(|| missing("pair_key")),
    }
}

/// Segments one document into records. Stateless, so documents can be
/// processed in any order or in parallel.
pub fn ingest_document(
    doc: &SourceDocument,
    kind: BucketKind,
    languages: &LanguageSet,
    segmenter: &Segmenter,
) -> Result<Vec<SentenceRecord>, IngestError> {
    let lang = languages
        .resolve(&doc.lang)
        .map_err(|_| IngestError::UnregisteredLanguage {
            doc_id: doc.doc_id.clone(),
            lang: doc.lang.clone(),
        })?;
    if doc.doc_id.is_empty() {
        return Err(IngestError::InvalidDocument {
            doc_id: String::new(),
            reason: "empty doc_id".to_string(),
        });
    }
    let sentences = match (&doc.text, &doc.pages) {
        (Some(text), None) => segmenter.segment(text, &lang),
        (None, Some(pages)) => segmenter.segment_pages(pages, &lang),
        _ => {
            return Err(IngestError::InvalidDocument {
                doc_id: doc.doc_id.clone(),
                reason: "exactly one of text/pages must be set".to_string(),
            })
        }
    };
    let bucket = bucket_for(doc, kind)?;
    Ok(sentences
        .into_iter()
        .enumerate()
        .map(|(i, text)| SentenceRecord {
            sent_id: sentence_id(&doc.doc_id, i),
            doc_id: doc.doc_id.clone(),
            lang: lang.clone(),
            text,
            bucket: bucket.clone(),
        })
        .collect())
}

/// Counts and skipped documents for one ingest run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IngestReport {
    pub documents: usize,
    pub documents_ingested: usize,
    pub sentences: usize,
    pub errors: Vec<IngestError>,
}

impl IngestReport {
    pub fn missing_metadata(&self) -> usize {
        self.errors
            .iter()
            .filter(|e| matches!(e, IngestError::MissingMetadata { .. }))
            .count()
    }
}

/// Collects per-document results, rejecting repeated doc ids.
#[derive(Debug, Default)]
pub struct IngestAccumulator {
    seen: BTreeSet<String>,
    report: IngestReport,
}

impl IngestAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Claims a doc id; returns false (and records an error) on repeats.
    pub fn claim(&mut self, doc_id: &str) -> bool {
        self.report.documents += 1;
        if self.seen.insert(doc_id.to_string()) {
            true
        } else {
            self.report.errors.push(IngestError::DuplicateDocument {
                doc_id: doc_id.to_string(),
            });
            false
        }
    }

    pub fn record(
        &mut self,
        result: Result<Vec<SentenceRecord>, IngestError>,
    ) -> Vec<SentenceRecord> {
        match result {
            Ok(records) => {
                self.report.documents_ingested += 1;
                self.report.sentences += records.len();
                records
            }
            Err(e) => {
                self.report.errors.push(e);
                Vec::new()
            }
        }
    }

    pub fn finish(mut self) -> IngestReport {
        self.report.errors.sort();
        self.report
    }
}

/// Sequential ingest of a document stream.
pub fn ingest<'a, I>(
    docs: I,
    kind: BucketKind,
    languages: &LanguageSet,
    segmenter: &Segmenter,
) -> (Vec<SentenceRecord>, IngestReport)
where
    I: IntoIterator<Item = &'a SourceDocument>,
{
    let mut acc = IngestAccumulator::new();
    let mut records = Vec::new();
    for doc in docs {
        if acc.claim(&doc.doc_id) {
            let result = ingest_document(doc, kind, languages, segmenter);
            records.extend(acc.record(result));
        }
    }
    (records, acc.finish())
}
