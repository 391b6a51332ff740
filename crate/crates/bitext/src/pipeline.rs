//! Staged mining run: ingest → embed → index → mine → refine → pivot →
//! sample.
//!
//! Every stage writes plain files under `out_dir` plus a manifest in
//! `out_dir/manifests/<stage>.json` recording input and output digests,
//! parameters, the seed and counts. A stage whose manifest still matches its
//! inputs, parameters and outputs is skipped on rerun.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bitext_core::corpus::{ingest, BucketKind, SentenceRecord};
use bitext_core::embedding::EmbeddingMatrix;
use bitext_core::eval::{merge_samples, stratified_sample};
use bitext_core::ivf::{default_probes, IvfPqIndex};
use bitext_core::lang::LanguageCode;
use bitext_core::langid::NgramDetector;
use bitext_core::mine::{mine_comparable, mine_docpair, mine_monolingual, BucketedSide, MiningMode, RetrievalParams};
use bitext_core::refine::{decontaminate, pivot_extract, refine_pairs, MinedPair};
use bitext_core::segment::{NonBreakingPrefixes, Segmenter};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::client::EmbedClient;
use crate::config::{CorpusConfig, RunConfig};
use crate::error::{BitextError, Result};
use crate::formats::{self, annotation, docs, heldout, pairs, semb, sentences, sivf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Ingest,
    Embed,
    Index,
    Mine,
    Refine,
    Pivot,
    Sample,
}

impl Stage {
    pub const ORDER: [Stage; 7] = [
        Stage::Ingest,
        Stage::Embed,
        Stage::Index,
        Stage::Mine,
        Stage::Refine,
        Stage::Pivot,
        Stage::Sample,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Embed => "embed",
            Stage::Index => "index",
            Stage::Mine => "mine",
            Stage::Refine => "refine",
            Stage::Pivot => "pivot",
            Stage::Sample => "sample",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = BitextError;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ORDER
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| BitextError::config(format!("unknown stage {s:?}")))
    }
}

/// Which stages to run. Stages before `from` are left untouched; `force`
/// reruns stages even when their manifests are current.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StagePlan {
    pub from: Stage,
    pub to: Stage,
    pub force: bool,
}

impl Default for StagePlan {
    fn default() -> Self {
        Self {
            from: Stage::Ingest,
            to: Stage::Sample,
            force: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ran,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub stage: Stage,
    pub status: StageStatus,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub stages: Vec<StageSummary>,
}

#[derive(Default)]
struct StageOutput {
    outputs: Vec<PathBuf>,
    counts: BTreeMap<String, u64>,
}

impl StageOutput {
    fn file(&mut self, p: PathBuf) {
        self.outputs.push(p);
    }

    fn count(&mut self, key: impl Into<String>, n: usize) {
        *self.counts.entry(key.into()).or_default() += n as u64;
    }
}

/// Artifact locations for a run.
#[derive(Debug, Clone)]
pub struct Layout {
    pub out: PathBuf,
}

impl Layout {
    pub fn manifest(&self, s: Stage) -> PathBuf {
        self.out.join("manifests").join(format!("{s}.json"))
    }

    pub fn effective_config(&self) -> PathBuf {
        self.out.join("effective_config.toml")
    }

    pub fn sentences(&self, corpus: &str, side: Side) -> PathBuf {
        self.out.join("ingest").join(format!("{corpus}.{side}.tsv"))
    }

    pub fn ingest_report(&self, corpus: &str) -> PathBuf {
        self.out.join("ingest").join(format!("{corpus}.report.json"))
    }

    pub fn fetched_embeddings(&self, corpus: &str, side: Side) -> PathBuf {
        self.out.join("embed").join(format!("{corpus}.{side}.semb"))
    }

    pub fn index(&self, corpus: &str) -> PathBuf {
        self.out.join("index").join(format!("{corpus}.sivf"))
    }

    pub fn mined(&self, corpus: &str) -> PathBuf {
        self.out.join("mine").join(format!("{corpus}.pairs.tsv"))
    }

    pub fn near_misses(&self, corpus: &str) -> PathBuf {
        self.out.join("mine").join(format!("{corpus}.near_misses.tsv"))
    }

    pub fn mine_report(&self, corpus: &str) -> PathBuf {
        self.out.join("mine").join(format!("{corpus}.report.json"))
    }

    pub fn refined(&self, corpus: &str) -> PathBuf {
        self.out.join("refine").join(format!("{corpus}.pairs.tsv"))
    }

    pub fn refined_near_misses(&self, corpus: &str) -> PathBuf {
        self.out.join("refine").join(format!("{corpus}.near_misses.tsv"))
    }

    pub fn refine_report(&self, corpus: &str) -> PathBuf {
        self.out.join("refine").join(format!("{corpus}.report.json"))
    }

    pub fn pivot(&self, a: &str, b: &str) -> PathBuf {
        self.out.join("pivot").join(format!("{a}-{b}.tsv"))
    }

    pub fn annotation_export(&self) -> PathBuf {
        self.out.join("sample").join("annotation.csv")
    }

    pub fn annotation_key(&self) -> PathBuf {
        self.out.join("sample").join("key.csv")
    }

    pub fn sample_report(&self) -> PathBuf {
        self.out.join("sample").join("report.json")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Src,
    Tgt,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Src => "src",
            Side::Tgt => "tgt",
        })
    }
}

pub fn bucket_kind(mode: MiningMode) -> BucketKind {
    match mode {
        MiningMode::Comparable => BucketKind::Month,
        MiningMode::Docpair => BucketKind::DocumentPair,
        MiningMode::Monolingual => BucketKind::Global,
    }
}

/// Bundled prefix lists, with overrides from `<dir>/<lang>.txt`.
pub fn build_segmenter(prefixes_dir: Option<&Path>) -> Result<Segmenter> {
    let mut seg = Segmenter::with_defaults();
    if let Some(dir) = prefixes_dir {
        let entries = std::fs::read_dir(dir).map_err(|e| BitextError::io(dir, e))?;
        for entry in entries {
            let path = entry.map_err(|e| BitextError::io(dir, e))?.path();
            let Some(lang) = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".txt"))
            else {
                continue;
            };
            let text = std::fs::read_to_string(&path).map_err(|e| BitextError::io(&path, e))?;
            seg.set_prefixes(&LanguageCode::new(lang)?, NonBreakingPrefixes::parse(&text));
        }
    }
    Ok(seg)
}

/// Loads embeddings and keeps the rows of `records`, in record order.
/// Every record must have a row, and the dimension must equal `dim` when
/// given.
pub fn embeddings_for(path: &Path, records: &[SentenceRecord], dim: Option<usize>) -> Result<EmbeddingMatrix> {
    let (matrix, report) = semb::read_semb(path)?;
    if let Some(dim) = dim.filter(|&d| d != matrix.dim() && !matrix.is_empty()) {
        return Err(BitextError::format(
            path,
            format!("dimension {} but the run expects {dim}", matrix.dim()),
        ));
    }
    if report.renormalized > 0 {
        log::warn!("{}: {} rows renormalized on load", path.display(), report.renormalized);
    }
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        rows.push(
            matrix
                .position(&r.sent_id)
                .ok_or_else(|| BitextError::format(path, format!("no embedding for sentence {}", r.sent_id)))?,
        );
    }
    let extra = matrix.len() - rows.len();
    if extra > 0 {
        log::warn!("{}: {extra} embeddings have no sentence and are ignored", path.display());
    }
    if rows.len() == matrix.len() && rows.iter().enumerate().all(|(i, &r)| i == r) {
        return Ok(matrix);
    }
    Ok(matrix.select(&rows))
}

pub fn corpus_langs(c: &CorpusConfig) -> Result<(LanguageCode, LanguageCode)> {
    Ok((LanguageCode::new(&c.src_lang)?, LanguageCode::new(&c.tgt_lang)?))
}

struct Runner<'a> {
    cfg: &'a RunConfig,
    layout: Layout,
    plan: StagePlan,
    summary: RunSummary,
}

fn digest_map(paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    paths
        .iter()
        .map(|p| Ok((p.display().to_string(), formats::sha256_file(p)?)))
        .collect()
}

impl Runner<'_> {
    fn embeddings_path(&self, c: &CorpusConfig, side: Side) -> PathBuf {
        let configured = match side {
            Side::Src => &c.src_embeddings,
            Side::Tgt => &c.tgt_embeddings,
        };
        configured
            .clone()
            .unwrap_or_else(|| self.layout.fetched_embeddings(&c.name, side))
    }

    fn is_current(&self, stage: Stage, params: &serde_json::Value, inputs: &BTreeMap<String, String>) -> bool {
        let Ok(m) = formats::read_json::<StageManifest>(&self.layout.manifest(stage)) else {
            return false;
        };
        if m.params != *params || m.seed != self.cfg.seed || m.inputs != *inputs {
            return false;
        }
        m.outputs
            .iter()
            .all(|(p, d)| formats::sha256_file(Path::new(p)).is_ok_and(|cur| &cur == d))
    }

    fn stage(
        &mut self,
        stage: Stage,
        inputs: Vec<PathBuf>,
        params: serde_json::Value,
        body: impl FnOnce(&Self) -> Result<StageOutput>,
    ) -> Result<()> {
        if stage < self.plan.from || stage > self.plan.to {
            return Ok(());
        }
        let wrap = |e| BitextError::stage(stage.as_str(), e);
        let input_digests = digest_map(&inputs).map_err(wrap)?;
        if !self.plan.force && self.is_current(stage, &params, &input_digests) {
            log::info!("stage {stage}: up to date, skipping");
            let m: StageManifest = formats::read_json(&self.layout.manifest(stage)).map_err(wrap)?;
            self.summary.stages.push(StageSummary {
                stage,
                status: StageStatus::Skipped,
                counts: m.counts,
            });
            return Ok(());
        }
        log::info!("stage {stage}: running");
        // A stale manifest must not survive a failed rerun.
        let _ = std::fs::remove_file(self.layout.manifest(stage));
        let out = body(self).map_err(wrap)?;
        let manifest = StageManifest {
            stage: stage.to_string(),
            seed: self.cfg.seed,
            params,
            inputs: input_digests,
            outputs: digest_map(&out.outputs).map_err(wrap)?,
            counts: out.counts.clone(),
        };
        formats::write_json(&self.layout.manifest(stage), &manifest).map_err(wrap)?;
        self.summary.stages.push(StageSummary {
            stage,
            status: StageStatus::Ran,
            counts: out.counts,
        });
        Ok(())
    }

    fn ingest(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let mut inputs = Vec::new();
        for c in &cfg.corpora {
            inputs.push(c.src_docs.clone());
            inputs.push(c.tgt_docs.clone());
        }
        if let Some(dir) = &cfg.prefixes_dir {
            inputs.extend(sorted_files(dir)?);
        }
        let params = json!({ "languages": cfg.languages, "corpora": cfg.corpora.iter().map(|c| json!({
            "name": c.name, "mode": c.mode, "src_lang": c.src_lang, "tgt_lang": c.tgt_lang,
        })).collect::<Vec<_>>() });
        self.stage(Stage::Ingest, inputs, params, |r| {
            let langs = cfg.language_set()?;
            let seg = build_segmenter(cfg.prefixes_dir.as_deref())?;
            let mut out = StageOutput::default();
            for c in &cfg.corpora {
                let kind = bucket_kind(c.mode);
                let (src_lang, tgt_lang) = corpus_langs(c)?;
                let mut reports = BTreeMap::new();
                for (side, path, lang) in [(Side::Src, &c.src_docs, &src_lang), (Side::Tgt, &c.tgt_docs, &tgt_lang)] {
                    let docs = docs::read_documents(path)?;
                    let (mut records, report) = ingest(&docs, kind, &langs, &seg);
                    let before = records.len();
                    records.retain(|rec| &rec.lang == lang);
                    if records.len() < before {
                        log::warn!(
                            "{}: dropped {} sentences not in {}",
                            path.display(),
                            before - records.len(),
                            lang.as_str()
                        );
                    }
                    let tsv = r.layout.sentences(&c.name, side);
                    sentences::write_sentences(&tsv, &records)?;
                    out.count(format!("{}.{side}.sentences", c.name), records.len());
                    out.count(format!("{}.{side}.errors", c.name), report.errors.len());
                    out.file(tsv);
                    reports.insert(side.to_string(), report);
                }
                let rp = r.layout.ingest_report(&c.name);
                formats::write_json(&rp, &reports)?;
                out.file(rp);
            }
            Ok(out)
        })
    }

    fn embed(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let mut inputs = Vec::new();
        for c in &cfg.corpora {
            for side in [Side::Src, Side::Tgt] {
                if self.configured_embeddings(c, side).is_none() {
                    inputs.push(self.layout.sentences(&c.name, side));
                }
            }
        }
        let params = json!({ "provider": cfg.provider, "dim": cfg.dim });
        self.stage(Stage::Embed, inputs, params, |r| {
            let mut out = StageOutput::default();
            let client = cfg.provider.clone().map(EmbedClient::new).transpose()?;
            for c in &cfg.corpora {
                for side in [Side::Src, Side::Tgt] {
                    if let Some(p) = r.configured_embeddings(c, side) {
                        // Precomputed files are read by the stages that use them.
                        log::info!("{}.{side}: using {}", c.name, p.display());
                        continue;
                    }
                    let client = client.as_ref().ok_or_else(|| BitextError::config("no provider configured"))?;
                    let records = sentences::read_sentences(&r.layout.sentences(&c.name, side))?;
                    let (matrix, fixed) = client.fetch_embeddings(&records, cfg.dim)?;
                    let path = r.layout.fetched_embeddings(&c.name, side);
                    semb::write_semb(&path, &matrix)?;
                    out.count(format!("{}.{side}.vectors", c.name), matrix.len());
                    out.count(format!("{}.{side}.renormalized", c.name), fixed);
                    out.file(semb::sidecar_path(&path));
                    out.file(path);
                }
            }
            Ok(out)
        })
    }

    fn configured_embeddings<'c>(&self, c: &'c CorpusConfig, side: Side) -> Option<&'c PathBuf> {
        match side {
            Side::Src => c.src_embeddings.as_ref(),
            Side::Tgt => c.tgt_embeddings.as_ref(),
        }
    }

    fn side_inputs(&self, c: &CorpusConfig) -> Vec<PathBuf> {
        let mut v = Vec::new();
        for side in [Side::Src, Side::Tgt] {
            let e = self.embeddings_path(c, side);
            v.push(self.layout.sentences(&c.name, side));
            v.push(semb::sidecar_path(&e));
            v.push(e);
        }
        v
    }

    fn index(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let inputs: Vec<PathBuf> = cfg.corpora.iter().flat_map(|c| self.side_inputs(c)).collect();
        let params = json!({ "index": cfg.index, "dim": cfg.dim });
        self.stage(Stage::Index, inputs, params, |r| {
            let mut out = StageOutput::default();
            for c in &cfg.corpora {
                let src = sentences::read_sentences(&r.layout.sentences(&c.name, Side::Src))?;
                let tgt = sentences::read_sentences(&r.layout.sentences(&c.name, Side::Tgt))?;
                let src_m = embeddings_for(&r.embeddings_path(c, Side::Src), &src, Some(cfg.dim))?;
                let tgt_m = embeddings_for(&r.embeddings_path(c, Side::Tgt), &tgt, Some(cfg.dim))?;
                out.count(format!("{}.src.vectors", c.name), src_m.len());
                out.count(format!("{}.tgt.vectors", c.name), tgt_m.len());
                if c.mode != MiningMode::Monolingual {
                    continue;
                }
                if src_m.is_empty() {
                    return Err(bitext_core::Error::EmptyIndex.into());
                }
                let mut index = IvfPqIndex::train(&src_m, &cfg.index.params(cfg.seed))?;
                index.add(&src_m)?;
                let path = r.layout.index(&c.name);
                sivf::write_index(&path, &index)?;
                out.count(format!("{}.clusters", c.name), index.clusters());
                out.file(path);
            }
            Ok(out)
        })
    }

    fn mine(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let mut inputs = Vec::new();
        for c in &cfg.corpora {
            inputs.extend(self.side_inputs(c));
            if c.mode == MiningMode::Monolingual {
                inputs.push(self.layout.index(&c.name));
            }
        }
        let params = json!({
            "thresholds": cfg.thresholds,
            "probes": cfg.index.probes,
            "top_k": cfg.index.top_k,
        });
        self.stage(Stage::Mine, inputs, params, |r| {
            let mut out = StageOutput::default();
            for c in &cfg.corpora {
                let src = sentences::read_sentences(&r.layout.sentences(&c.name, Side::Src))?;
                let tgt = sentences::read_sentences(&r.layout.sentences(&c.name, Side::Tgt))?;
                let src_m = embeddings_for(&r.embeddings_path(c, Side::Src), &src, Some(cfg.dim))?;
                let tgt_m = embeddings_for(&r.embeddings_path(c, Side::Tgt), &tgt, Some(cfg.dim))?;
                let outcome = match c.mode {
                    MiningMode::Monolingual => {
                        let index = sivf::read_index(&r.layout.index(&c.name))?;
                        let params = RetrievalParams {
                            probes: cfg.index.probes.unwrap_or_else(|| default_probes(index.clusters())),
                            top_k: cfg.index.top_k,
                        };
                        mine_monolingual(&tgt_m, &index, &src_m, &cfg.thresholds, params)?
                    }
                    mode => {
                        let s = BucketedSide::from_records(&src, &src_m)?;
                        let t = BucketedSide::from_records(&tgt, &tgt_m)?;
                        if mode == MiningMode::Comparable {
                            mine_comparable(&s, &t, &cfg.thresholds)
                        } else {
                            mine_docpair(&s, &t, &cfg.thresholds)
                        }
                    }
                };
                let rows = pairs::candidate_rows(&outcome.pairs, &src, &tgt)?;
                let near = pairs::candidate_rows(&outcome.near_misses, &src, &tgt)?;
                for (path, rows) in [(r.layout.mined(&c.name), rows), (r.layout.near_misses(&c.name), near)] {
                    pairs::write_pairs(&path, &rows)?;
                    out.file(path);
                }
                let rp = r.layout.mine_report(&c.name);
                formats::write_json(&rp, &outcome.report)?;
                out.file(rp);
                out.count(format!("{}.pairs", c.name), outcome.pairs.len());
                out.count(format!("{}.near_misses", c.name), outcome.near_misses.len());
                out.count(format!("{}.targets", c.name), outcome.report.targets);
            }
            Ok(out)
        })
    }

    fn refine(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let mut inputs = Vec::new();
        for c in &cfg.corpora {
            inputs.push(self.layout.mined(&c.name));
            inputs.push(self.layout.near_misses(&c.name));
        }
        if let Some(dir) = &cfg.heldout_dir {
            inputs.extend(sorted_files(dir)?);
        }
        let params = json!({ "filters": cfg.filters, "languages": cfg.languages });
        self.stage(Stage::Refine, inputs, params, |r| {
            let mut out = StageOutput::default();
            let detector = NgramDetector::builtin();
            let held = match &cfg.heldout_dir {
                Some(dir) => heldout::read_heldout_dir(dir)?,
                None => Vec::new(),
            };
            for c in &cfg.corpora {
                let (sl, tl) = corpus_langs(c)?;
                let mut report = BTreeMap::new();
                for (input, output, key) in [
                    (r.layout.mined(&c.name), r.layout.refined(&c.name), "pairs"),
                    (r.layout.near_misses(&c.name), r.layout.refined_near_misses(&c.name), "near_misses"),
                ] {
                    let mined = pairs::read_mined(&input, &sl, &tl, &c.name)?;
                    let (kept, mut rep) = refine_pairs(mined, &cfg.filters, Some(&detector))?;
                    let kept = if held.is_empty() {
                        kept
                    } else {
                        let (kept, dr) = decontaminate(kept, &held);
                        rep.filters_applied.push("decontaminate".into());
                        report.insert(format!("{key}_decontamination"), serde_json::to_value(dr).expect("report serializes"));
                        kept
                    };
                    pairs::write_mined(&output, &kept)?;
                    out.count(format!("{}.{key}", c.name), kept.len());
                    out.file(output);
                    report.insert(key.to_string(), serde_json::to_value(rep).expect("report serializes"));
                }
                let rp = r.layout.refine_report(&c.name);
                formats::write_json(&rp, &report)?;
                out.file(rp);
            }
            Ok(out)
        })
    }

    fn refined_for(&self, lang: &LanguageCode) -> Result<Vec<MinedPair>> {
        let mut all = Vec::new();
        for c in &self.cfg.corpora {
            let (sl, tl) = corpus_langs(c)?;
            let english_centric = (sl.is_english() && &tl == lang) || (tl.is_english() && &sl == lang);
            if english_centric {
                all.extend(pairs::read_mined(&self.layout.refined(&c.name), &sl, &tl, &c.name)?);
            }
        }
        Ok(all)
    }

    fn pivot(&mut self) -> Result<()> {
        let cfg = self.cfg;
        let inputs: Vec<PathBuf> = if cfg.pivots.is_empty() {
            Vec::new()
        } else {
            cfg.corpora.iter().map(|c| self.layout.refined(&c.name)).collect()
        };
        let params = json!({ "pivots": cfg.pivots });
        self.stage(Stage::Pivot, inputs, params, |r| {
            let mut out = StageOutput::default();
            for [a, b] in &cfg.pivots {
                let (la, lb) = (LanguageCode::new(a)?, LanguageCode::new(b)?);
                let pa = r.refined_for(&la)?;
                let pb = r.refined_for(&lb)?;
                let joined = pivot_extract(&pa, &pb, cfg.seed);
                let path = r.layout.pivot(a, b);
                pairs::write_pivot(&path, &joined)?;
                out.count(format!("{a}-{b}"), joined.len());
                out.file(path);
            }
            Ok(out)
        })
    }

    fn sample(&mut self) -> Result<()> {
        let cfg = self.cfg;
        if !cfg.sample.enabled {
            return Ok(());
        }
        let mut inputs = Vec::new();
        for c in &cfg.corpora {
            inputs.push(self.layout.refined(&c.name));
            inputs.push(self.layout.refined_near_misses(&c.name));
        }
        let params = json!({ "sample": cfg.sample, "thresholds": cfg.thresholds });
        self.stage(Stage::Sample, inputs, params, |r| {
            let mut out = StageOutput::default();
            let mut groups = Vec::new();
            let mut reports = BTreeMap::new();
            for (i, c) in cfg.corpora.iter().enumerate() {
                let (sl, tl) = corpus_langs(c)?;
                let mut pool = pairs::read_mined(&r.layout.refined(&c.name), &sl, &tl, &c.name)?;
                pool.extend(pairs::read_mined(&r.layout.refined_near_misses(&c.name), &sl, &tl, &c.name)?);
                let threshold = cfg.thresholds.for_mode(c.mode);
                let seed = cfg.seed.wrapping_add(i as u64);
                let (samples, report) = stratified_sample(&pool, threshold, cfg.sample.n_per_band, seed);
                for w in &report.warnings {
                    log::warn!("{}: {w}", c.name);
                }
                reports.insert(c.name.clone(), report);
                groups.push(samples);
            }
            let samples = merge_samples(groups, cfg.seed);
            annotation::write_export(&r.layout.annotation_export(), &samples)?;
            annotation::write_key(&r.layout.annotation_key(), &samples)?;
            formats::write_json(&r.layout.sample_report(), &reports)?;
            out.count("samples", samples.len());
            out.count("batches", samples.len().div_ceil(bitext_core::eval::BATCH_SIZE));
            out.file(r.layout.annotation_export());
            out.file(r.layout.annotation_key());
            out.file(r.layout.sample_report());
            Ok(out)
        })
    }
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| BitextError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    v.sort();
    Ok(v)
}

/// Validates `cfg`, snapshots it and runs the planned stages in order.
///
/// Configuration problems surface as [`BitextError::Config`] before any
/// stage runs; failures inside a stage as [`BitextError::StageFailure`],
/// leaving earlier outputs in place.
pub fn run_pipeline(cfg: &RunConfig, plan: StagePlan) -> Result<RunSummary> {
    cfg.validate()?;
    if plan.from > plan.to {
        return Err(BitextError::config(format!("stage {} comes after {}", plan.from, plan.to)));
    }
    let layout = Layout { out: cfg.out_dir.clone() };
    std::fs::create_dir_all(&layout.out).map_err(|e| BitextError::io(&layout.out, e))?;
    let snapshot = layout.effective_config();
    std::fs::write(&snapshot, cfg.to_toml()).map_err(|e| BitextError::io(&snapshot, e))?;
    let mut runner = Runner {
        cfg,
        layout,
        plan,
        summary: RunSummary {
            out_dir: cfg.out_dir.clone(),
            stages: Vec::new(),
        },
    };
    let go = |r: &mut Runner<'_>| -> Result<()> {
        r.ingest()?;
        r.embed()?;
        r.index()?;
        r.mine()?;
        r.refine()?;
        r.pivot()?;
        r.sample()
    };
    if cfg.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| BitextError::config(e.to_string()))?;
        pool.install(|| go(&mut runner))?;
    } else {
        go(&mut runner)?;
    }
    Ok(runner.summary)
}
