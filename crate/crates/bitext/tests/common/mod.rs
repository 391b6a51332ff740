//! Synthetic corpora with planted parallel pairs.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use bitext::config::{CorpusConfig, IndexConfig, RunConfig, SampleConfig};
use bitext::fake::FakeEncoder;
use bitext::formats::{docs, semb};
use bitext_core::corpus::{ingest, SourceDocument};
use bitext_core::embedding::{dot, EmbeddingMatrix};
use bitext_core::lang::{LanguageSet, DEFAULT_LANGUAGES};
use bitext_core::mine::MiningMode;
use bitext_core::refine::FilterConfig;
use bitext_core::segment::Segmenter;

pub const NOISE: f64 = 0.25;

/// One sentence and the paraphrase key it shares with its translation.
#[derive(Debug, Clone)]
pub struct Line {
    pub text: String,
    pub key: Option<String>,
}

pub fn planted(text: String, key: &str) -> Line {
    Line {
        text,
        key: Some(key.to_string()),
    }
}

pub fn distractor(text: String) -> Line {
    Line { text, key: None }
}

pub fn english(i: usize, tag: &str) -> String {
    const WORDS: [&str; 12] = [
        "river", "market", "school", "festival", "train", "harvest", "council", "museum", "bridge", "monsoon",
        "library", "village",
    ];
    format!(
        "The {tag} report number {i} mentions the {} near the {}.",
        WORDS[i % 12],
        WORDS[(i / 12) % 12]
    )
}

pub fn hindi(i: usize, tag: &str) -> String {
    const WORDS: [&str; 8] = ["नदी", "बाज़ार", "विद्यालय", "त्योहार", "रेलगाड़ी", "फसल", "पुल", "गाँव"];
    format!("{tag} रिपोर्ट संख्या {i} में {} और {} का उल्लेख है।", WORDS[i % 8], WORDS[(i / 8) % 8])
}

pub fn marathi(i: usize, tag: &str) -> String {
    format!("{tag} अहवाल क्रमांक {i} मध्ये गावाचा उल्लेख आहे.")
}

/// Writes `lines` as documents of `per_doc` sentences and their embeddings.
/// `meta(doc_index)` supplies `(published, pair_key)`.
#[allow(clippy::too_many_arguments)]
pub fn write_side(
    dir: &Path,
    name: &str,
    lang: &str,
    mode: MiningMode,
    lines: &[Line],
    per_doc: usize,
    enc: &FakeEncoder,
    meta: impl Fn(usize) -> (Option<String>, Option<String>),
) -> (PathBuf, PathBuf) {
    let documents: Vec<SourceDocument> = lines
        .chunks(per_doc)
        .enumerate()
        .map(|(j, chunk)| {
            let (published, pair_key) = meta(j);
            SourceDocument {
                doc_id: format!("{name}{j:05}"),
                lang: lang.to_string(),
                text: Some(chunk.iter().map(|l| l.text.as_str()).collect::<Vec<_>>().join(" ")),
                source: "fixture".into(),
                published,
                pair_key,
                pages: None,
            }
        })
        .collect();
    let docs_path = dir.join(format!("{name}.jsonl"));
    docs::write_documents(&docs_path, &documents).unwrap();

    let langs = LanguageSet::new(DEFAULT_LANGUAGES).unwrap();
    let (records, report) = ingest(&documents, bitext::pipeline::bucket_kind(mode), &langs, &Segmenter::with_defaults());
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    assert_eq!(records.len(), lines.len(), "fixture sentences must segment one to one");
    let by_text: HashMap<&str, &Line> = lines.iter().map(|l| (l.text.as_str(), l)).collect();
    let mut ids = Vec::with_capacity(records.len());
    let mut data = Vec::with_capacity(records.len() * enc.dim);
    for r in &records {
        let line = by_text[r.text.as_str()];
        ids.push(r.sent_id.clone());
        data.extend(enc.embed_keyed(&line.text, line.key.as_deref(), NOISE));
    }
    let m = EmbeddingMatrix::new(ids, data, enc.dim).unwrap();
    let semb_path = dir.join(format!("{name}.semb"));
    semb::write_semb(&semb_path, &m).unwrap();
    (docs_path, semb_path)
}

pub fn base_config(dir: &Path, dim: usize) -> RunConfig {
    RunConfig {
        seed: 11,
        workers: 1,
        out_dir: dir.join("out"),
        dim,
        index: IndexConfig {
            clusters: Some(16),
            subspaces: 8,
            top_k: 4,
            ..IndexConfig::default()
        },
        filters: FilterConfig {
            langid_enabled: false,
            ..FilterConfig::default()
        },
        sample: SampleConfig {
            enabled: true,
            n_per_band: 5,
        },
        ..RunConfig::default()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn add_corpus(
    cfg: &mut RunConfig,
    dir: &Path,
    name: &str,
    mode: MiningMode,
    (src_lang, src): (&str, &[Line]),
    (tgt_lang, tgt): (&str, &[Line]),
    per_doc: usize,
    enc: &FakeEncoder,
    meta: impl Fn(usize) -> (Option<String>, Option<String>) + Copy,
) {
    let (src_docs, src_emb) = write_side(dir, &format!("{name}.src"), src_lang, mode, src, per_doc, enc, meta);
    let (tgt_docs, tgt_emb) = write_side(dir, &format!("{name}.tgt"), tgt_lang, mode, tgt, per_doc, enc, meta);
    cfg.corpora.push(CorpusConfig {
        name: name.into(),
        mode,
        src_lang: src_lang.into(),
        tgt_lang: tgt_lang.into(),
        src_docs,
        tgt_docs,
        src_embeddings: Some(src_emb),
        tgt_embeddings: Some(tgt_emb),
    });
}

/// English/Hindi comparable corpus over two months: `n` planted pairs per
/// month plus `n` unmatched sentences per side and month.
pub fn comparable_config(dir: &Path, n: usize) -> RunConfig {
    let enc = FakeEncoder::new(64, 3);
    let mut cfg = base_config(dir, 64);
    let mut en = Vec::new();
    let mut hi = Vec::new();
    for month in 0..2 {
        for i in 0..n {
            let k = month * n + i;
            en.push(planted(english(k, "planted"), &format!("c{k}")));
            hi.push(planted(hindi(k, "planted"), &format!("c{k}")));
        }
        for i in 0..n {
            let k = month * n + i;
            en.push(distractor(english(k, "other")));
            hi.push(distractor(hindi(k, "other")));
        }
    }
    let per_doc = n;
    // Two documents per month on each side.
    let meta = |j: usize| (Some(format!("2021-0{}-15", 1 + j / 2)), None);
    add_corpus(&mut cfg, dir, "cmp", MiningMode::Comparable, ("en", &en), ("hi", &hi), per_doc, &enc, meta);
    cfg
}

/// Exact cosine between two rows of separate matrices.
pub fn cosine(a: &EmbeddingMatrix, ia: &str, b: &EmbeddingMatrix, ib: &str) -> f64 {
    dot(a.get(ia).unwrap(), b.get(ib).unwrap())
}
