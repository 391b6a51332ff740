//! Candidate pair mining.
//!
//! Targets are the non-English side and sources the English side. Every
//! target gets at most one candidate: the source with the highest exact
//! cosine inside its bucket (comparable and document-pair modes), or the
//! best IVF-PQ hit re-scored on full embeddings (monolingual mode).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::corpus::SentenceRecord;
use crate::embedding::{cosine_similarity, dot, EmbeddingMatrix, LasScore};
use crate::error::{Error, Result};
use crate::ivf::IvfPqIndex;

/// Width of the sub-threshold band kept for quality sampling.
pub const NEAR_MISS_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MiningMode {
    Comparable,
    #[cfg_attr(feature = "serde", serde(alias = "document_pair"))]
    Docpair,
    Monolingual,
}

impl MiningMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MiningMode::Comparable => "comparable",
            MiningMode::Docpair => "docpair",
            MiningMode::Monolingual => "monolingual",
        }
    }
}

impl fmt::Display for MiningMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MiningMode {
    type Err = String;

    fn from_str(s: &str) -> core::result::Result<Self, String> {
        match s {
            "comparable" => Ok(MiningMode::Comparable),
            "docpair" | "document_pair" => Ok(MiningMode::Docpair),
            "monolingual" | "mono" => Ok(MiningMode::Monolingual),
            other => Err(alloc::format!("unknown mining mode `{other}`")),
        }
    }
}

/// Minimum alignment score per mining mode.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ThresholdPolicy {
    pub comparable: f64,
    pub monolingual: f64,
    pub docpair: f64,
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        Self {
            comparable: 0.75,
            monolingual: 0.80,
            docpair: 0.75,
        }
    }
}

impl ThresholdPolicy {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [
            ("comparable", self.comparable),
            ("monolingual", self.monolingual),
            ("docpair", self.docpair),
        ] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "{name} threshold {t} outside (0, 1)"
                )));
            }
        }
        Ok(())
    }

    pub fn for_mode(&self, mode: MiningMode) -> f64 {
        match mode {
            MiningMode::Comparable => self.comparable,
            MiningMode::Docpair => self.docpair,
            MiningMode::Monolingual => self.monolingual,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePair {
    pub src_id: String,
    pub tgt_id: String,
    pub approx_score: Option<f32>,
    /// Exact cosine of the full embeddings, never the quantized score.
    pub las: LasScore,
    pub mode: MiningMode,
    pub bucket: String,
}

/// Sentences of one side grouped by bucket, as row indices into a matrix.
#[derive(Debug, Clone)]
pub struct BucketedSide<'a> {
    matrix: &'a EmbeddingMatrix,
    buckets: BTreeMap<String, Vec<usize>>,
}

impl<'a> BucketedSide<'a> {
    /// Groups `records` by their bucket; every record needs an embedding.
    pub fn from_records(records: &[SentenceRecord], matrix: &'a EmbeddingMatrix) -> Result<Self> {
        let mut buckets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for r in records {
            let row = matrix
                .position(&r.sent_id)
                .ok_or_else(|| Error::UnknownId(r.sent_id.clone()))?;
            buckets.entry(r.bucket.to_string()).or_default().push(row);
        }
        Ok(Self { matrix, buckets })
    }

    /// Everything in one bucket.
    pub fn single(bucket: &str, matrix: &'a EmbeddingMatrix) -> Self {
        let mut buckets = BTreeMap::new();
        buckets.insert(bucket.to_string(), (0..matrix.len()).collect());
        Self { matrix, buckets }
    }

    pub fn matrix(&self) -> &EmbeddingMatrix {
        self.matrix
    }

    pub fn buckets(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.buckets.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn bucket(&self, key: &str) -> Option<&[usize]> {
        self.buckets.get(key).map(Vec::as_slice)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BucketReport {
    pub bucket: String,
    pub sources: usize,
    pub targets: usize,
    pub candidates: usize,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum MiningIssue {
    /// A bucket with sentences on one side only.
    EmptyBucketSide { bucket: String, missing: String },
    /// A document-pair key present on one side only.
    UnpairedDocument { pair_key: String, present: String },
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MiningReport {
    pub mode: String,
    pub threshold: f64,
    pub targets: usize,
    pub candidates: usize,
    pub accepted: usize,
    pub rejected_below_threshold: usize,
    pub buckets: Vec<BucketReport>,
    pub issues: Vec<MiningIssue>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MiningOutcome {
    /// Accepted pairs, sorted by `(tgt_id, src_id)`.
    pub pairs: Vec<CandidatePair>,
    /// Rejected candidates within `NEAR_MISS_MARGIN` below the threshold.
    pub near_misses: Vec<CandidatePair>,
    pub report: MiningReport,
}

fn canonical_sort(pairs: &mut [CandidatePair]) {
    pairs.sort_by(|a, b| a.tgt_id.cmp(&b.tgt_id).then_with(|| a.src_id.cmp(&b.src_id)));
}

/// Best source for every target within one bucket, by exact cosine.
/// Ties go to the lower source id. Empty sides yield no pairs.
pub fn align_bucket(
    src: &EmbeddingMatrix,
    src_rows: &[usize],
    tgt: &EmbeddingMatrix,
    tgt_rows: &[usize],
    mode: MiningMode,
    bucket: &str,
) -> Vec<CandidatePair> {
    if src_rows.is_empty() {
        return Vec::new();
    }
    let align_one = |&t: &usize| {
        let q = tgt.row(t);
        let mut best: Option<(f64, &str)> = None;
        for &s in src_rows {
            let score = dot(q, src.row(s));
            let id = src.ids()[s].as_str();
            let wins = match best {
                None => true,
                Some((b, bid)) => score > b || (score == b && id < bid),
            };
            if wins {
                best = Some((score, id));
            }
        }
        let (score, id) = best.expect("nonempty source side");
        CandidatePair {
            src_id: id.to_string(),
            tgt_id: tgt.ids()[t].clone(),
            approx_score: None,
            las: LasScore(score),
            mode,
            bucket: bucket.to_string(),
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        tgt_rows.par_iter().map(align_one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        tgt_rows.iter().map(align_one).collect()
    }
}

/// Splits candidates into accepted pairs and near misses.
fn apply_threshold(
    candidates: Vec<CandidatePair>,
    threshold: f64,
    out: &mut MiningOutcome,
) -> usize {
    let mut accepted = 0;
    for c in candidates {
        let las = c.las.value();
        if las >= threshold {
            accepted += 1;
            out.pairs.push(c);
        } else {
            out.report.rejected_below_threshold += 1;
            if las >= threshold - NEAR_MISS_MARGIN {
                out.near_misses.push(c);
            }
        }
    }
    accepted
}

fn mine_bucketed(
    src: &BucketedSide<'_>,
    tgt: &BucketedSide<'_>,
    mode: MiningMode,
    threshold: f64,
) -> MiningOutcome {
    let mut out = MiningOutcome::default();
    out.report.mode = mode.as_str().to_string();
    out.report.threshold = threshold;
    for (bucket, tgt_rows) in tgt.buckets() {
        out.report.targets += tgt_rows.len();
        let src_rows = src.bucket(bucket).unwrap_or(&[]);
        if src_rows.is_empty() {
            out.report.issues.push(match mode {
                MiningMode::Docpair => MiningIssue::UnpairedDocument {
                    pair_key: bucket.to_string(),
                    present: "target".to_string(),
                },
                _ => MiningIssue::EmptyBucketSide {
                    bucket: bucket.to_string(),
                    missing: "source".to_string(),
                },
            });
        }
        let candidates = align_bucket(src.matrix(), src_rows, tgt.matrix(), tgt_rows, mode, bucket);
        let n = candidates.len();
        let accepted = apply_threshold(candidates, threshold, &mut out);
        out.report.candidates += n;
        out.report.accepted += accepted;
        out.report.buckets.push(BucketReport {
            bucket: bucket.to_string(),
            sources: src_rows.len(),
            targets: tgt_rows.len(),
            candidates: n,
            accepted,
        });
    }
    for (bucket, _) in src.buckets() {
        if tgt.bucket(bucket).is_none() {
            out.report.issues.push(match mode {
                MiningMode::Docpair => MiningIssue::UnpairedDocument {
                    pair_key: bucket.to_string(),
                    present: "source".to_string(),
                },
                _ => MiningIssue::EmptyBucketSide {
                    bucket: bucket.to_string(),
                    missing: "target".to_string(),
                },
            });
        }
    }
    out.report.issues.sort();
    canonical_sort(&mut out.pairs);
    canonical_sort(&mut out.near_misses);
    out
}

/// Month-bucketed comparable corpora; pairs never cross buckets.
pub fn mine_comparable(
    src: &BucketedSide<'_>,
    tgt: &BucketedSide<'_>,
    policy: &ThresholdPolicy,
) -> MiningOutcome {
    mine_bucketed(src, tgt, MiningMode::Comparable, policy.comparable)
}

/// Known parallel documents, bucketed by pair key.
pub fn mine_docpair(
    src: &BucketedSide<'_>,
    tgt: &BucketedSide<'_>,
    policy: &ThresholdPolicy,
) -> MiningOutcome {
    mine_bucketed(src, tgt, MiningMode::Docpair, policy.docpair)
}

/// Retrieval settings for monolingual mining.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetrievalParams {
    pub probes: usize,
    pub top_k: usize,
}

/// Global search of every target against an index of the source corpus.
///
/// Each target's hits are re-scored with the exact cosine of the full
/// embeddings; the best re-scored hit (the rank-1 hit when `top_k == 1`)
/// becomes the candidate, kept iff it reaches the monolingual threshold.
pub fn mine_monolingual(
    tgt: &EmbeddingMatrix,
    index: &IvfPqIndex,
    src: &EmbeddingMatrix,
    policy: &ThresholdPolicy,
    params: RetrievalParams,
) -> Result<MiningOutcome> {
    if index.is_empty() {
        return Err(Error::EmptyIndex);
    }
    if tgt.dim() != index.dim() || src.dim() != index.dim() {
        return Err(Error::DimensionMismatch {
            expected: index.dim(),
            actual: if tgt.dim() != index.dim() { tgt.dim() } else { src.dim() },
        });
    }
    let bucket = crate::corpus::BucketKey::global().to_string();
    let mine_one = |t: usize| -> Result<Option<CandidatePair>> {
        let q = tgt.row(t);
        let hits = index.search(q, params.probes, params.top_k.max(1))?;
        let mut best: Option<CandidatePair> = None;
        for hit in hits {
            let row = src
                .get(&hit.sent_id)
                .ok_or_else(|| Error::UnknownId(hit.sent_id.clone()))?;
            let las = cosine_similarity(q, row)?;
            let wins = match &best {
                None => true,
                Some(b) => las.0 > b.las.0 || (las.0 == b.las.0 && hit.sent_id < b.src_id),
            };
            if wins {
                best = Some(CandidatePair {
                    src_id: hit.sent_id,
                    tgt_id: tgt.ids()[t].clone(),
                    approx_score: Some(hit.approx_score),
                    las,
                    mode: MiningMode::Monolingual,
                    bucket: bucket.clone(),
                });
            }
        }
        Ok(best)
    };
    #[cfg(feature = "parallel")]
    let found: Vec<Option<CandidatePair>> = {
        use rayon::prelude::*;
        (0..tgt.len()).into_par_iter().map(mine_one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let found: Vec<Option<CandidatePair>> = (0..tgt.len()).map(mine_one).collect::<Result<_>>()?;

    let threshold = policy.monolingual;
    let mut out = MiningOutcome::default();
    out.report.mode = MiningMode::Monolingual.as_str().to_string();
    out.report.threshold = threshold;
    out.report.targets = tgt.len();
    let candidates: Vec<CandidatePair> = found.into_iter().flatten().collect();
    out.report.candidates = candidates.len();
    out.report.accepted = apply_threshold(candidates, threshold, &mut out);
    out.report.buckets.push(BucketReport {
        bucket,
        sources: index.len(),
        targets: tgt.len(),
        candidates: out.report.candidates,
        accepted: out.report.accepted,
    });
    canonical_sort(&mut out.pairs);
    canonical_sort(&mut out.near_misses);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::BucketKey;
    use crate::embedding::normalize;
    use crate::ivf::IndexParams;
    use crate::lang::LanguageCode;
    use alloc::format;
    use alloc::vec;
    use alloc::vec::Vec;

    fn matrix(prefix: &str, rows: &[&[f32]]) -> EmbeddingMatrix {
        let dim = rows[0].len();
        let ids = (0..rows.len()).map(|i| format!("{prefix}{i}")).collect();
        let data = rows.iter().flat_map(|r| normalize(r).unwrap().into_inner()).collect();
        EmbeddingMatrix::new(ids, data, dim).unwrap()
    }

    fn record(id: &str, bucket: BucketKey) -> SentenceRecord {
        SentenceRecord {
            sent_id: id.to_string(),
            doc_id: "d".to_string(),
            lang: LanguageCode::new("en").unwrap(),
            text: String::new(),
            bucket,
        }
    }

    #[test]
    fn one_pair_per_target() {
        let src = matrix("e", &[&[1.0, 0.0], &[0.0, 1.0]]);
        let tgt = matrix("h", &[&[1.0, 0.1], &[0.1, 1.0], &[1.0, 1.0], &[-1.0, 0.2], &[0.3, 0.9]]);
        let pairs = align_bucket(&src, &[0, 1], &tgt, &[0, 1, 2, 3, 4], MiningMode::Comparable, "b");
        assert_eq!(pairs.len(), 5);
        // [1,1] is equidistant: lower id wins
        assert_eq!(pairs[2].src_id, "e0");
    }

    #[test]
    fn duplicate_embedding_wins_with_score_one() {
        let src = matrix("e", &[&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]]);
        let tgt = matrix("h", &[&[3.0, 2.0, 1.0]]);
        let pairs = align_bucket(&src, &[0, 1], &tgt, &[0], MiningMode::Comparable, "b");
        assert_eq!(pairs[0].src_id, "e1");
        assert!((pairs[0].las.0 - 1.0).abs() < 1e-6);
    }

    /// 3x3 bucket: argmax per target matches enumeration of all 9 cosines.
    #[test]
    fn three_by_three_matches_enumeration() {
        let src_rows: [&[f32]; 3] = [&[1.0, 0.0, 0.0], &[0.6, 0.8, 0.0], &[0.0, 0.6, 0.8]];
        let tgt_rows: [&[f32]; 3] = [&[0.8, 0.6, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]];
        // cosines by hand (all rows are unit already):
        // t0: s0 .8, s1 .48+.48=.96, s2 .36      -> s1
        // t1: s0 0,  s1 0,           s2 .8       -> s2
        // t2: s0 0,  s1 .8,          s2 .6       -> s1
        let expected = [("e1", 0.96), ("e2", 0.8), ("e1", 0.8)];
        let src = matrix("e", &src_rows);
        let tgt = matrix("h", &tgt_rows);
        let pairs = align_bucket(&src, &[0, 1, 2], &tgt, &[0, 1, 2], MiningMode::Comparable, "b");
        for (p, (id, score)) in pairs.iter().zip(expected) {
            assert_eq!(p.src_id, id);
            assert!((p.las.0 - score).abs() < 1e-6);
        }
    }

    #[test]
    fn comparable_threshold_and_bucket_isolation() {
        // t0 has cosine 0.74 with its only same-month source, t1 has 0.76.
        let c74 = [0.74f32, libm::sqrtf(1.0 - 0.74 * 0.74)];
        let c76 = [0.76f32, libm::sqrtf(1.0 - 0.76 * 0.76)];
        let src = matrix("e", &[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let tgt = matrix("h", &[&c74, &c76, &[0.0, 1.0]]);
        let jan = BucketKey::month("2021-01").unwrap();
        let feb = BucketKey::month("2021-02").unwrap();
        let mar = BucketKey::month("2021-03").unwrap();
        let src_side = BucketedSide::from_records(
            &[record("e0", jan.clone()), record("e1", feb.clone()), record("e2", jan.clone())],
            &src,
        )
        .unwrap();
        // t2 equals e2 exactly but lives in March, where there are no sources.
        let tgt_side = BucketedSide::from_records(
            &[record("h0", jan.clone()), record("h1", feb), record("h2", mar)],
            &tgt,
        )
        .unwrap();
        let out = mine_comparable(&src_side, &tgt_side, &ThresholdPolicy::default());
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].tgt_id, "h1");
        assert_eq!(out.pairs[0].src_id, "e1");
        assert_eq!(out.near_misses.len(), 1);
        assert_eq!(out.report.rejected_below_threshold, 1);
        assert!(out.report.issues.iter().any(|i| matches!(
            i,
            MiningIssue::EmptyBucketSide { bucket, .. } if bucket == "month:2021-03"
        )));
    }

    #[test]
    fn docpair_unpaired_and_permutation() {
        let rows: Vec<Vec<f32>> = (0..10)
            .map(|i| (0..10).map(|j| if i == j { 1.0 } else { 0.05 }).collect())
            .collect();
        let refs: Vec<&[f32]> = rows.iter().map(Vec::as_slice).collect();
        let src = matrix("e", &refs);
        let tgt = matrix("h", &refs);
        let key = BucketKey::document_pair("budget").unwrap();
        let orphan = BucketKey::document_pair("orphan").unwrap();
        let mut src_records: Vec<_> = (0..10).map(|i| record(&format!("e{i}"), key.clone())).collect();
        src_records.push(record("e9", orphan.clone()));
        src_records.pop();
        let tgt_records: Vec<_> = (0..10).map(|i| record(&format!("h{i}"), key.clone())).collect();
        let src_side = BucketedSide::from_records(&src_records, &src).unwrap();
        let tgt_side = BucketedSide::from_records(&tgt_records, &tgt).unwrap();
        let out = mine_docpair(&src_side, &tgt_side, &ThresholdPolicy::default());
        assert_eq!(out.pairs.len(), 10);
        assert!(out.pairs.iter().all(|p| (p.las.0 - 1.0).abs() < 1e-6));

        // Shuffling row order does not change the pair set.
        let perm = [3usize, 7, 1, 9, 0, 5, 2, 8, 6, 4];
        let shuffled = src.select(&perm);
        let src_side2 = BucketedSide::from_records(&src_records, &shuffled).unwrap();
        let out2 = mine_docpair(&src_side2, &tgt_side, &ThresholdPolicy::default());
        assert_eq!(out.pairs, out2.pairs);

        // Key present on the English side only.
        let lonely = BucketedSide::from_records(&[record("e0", orphan)], &src).unwrap();
        let out3 = mine_docpair(&lonely, &tgt_side, &ThresholdPolicy::default());
        assert!(out3.pairs.is_empty());
        assert!(out3.report.issues.contains(&MiningIssue::UnpairedDocument {
            pair_key: "document_pair:orphan".into(),
            present: "source".into()
        }));
    }

    #[test]
    fn monolingual_threshold_and_rescoring() {
        // 300 random sources so PQ can train; two planted targets.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let dim = 8;
        let data: Vec<f32> = (0..300 * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ids = (0..300).map(|i| format!("e{i:03}")).collect();
        let src = EmbeddingMatrix::from_raw_rows(ids, data, dim).unwrap();
        let params = IndexParams {
            clusters: Some(4),
            subspaces: 4,
            ..IndexParams::default()
        };
        let mut index = IvfPqIndex::train(&src, &params).unwrap();
        index.add(&src).unwrap();
        let tgt = src.select(&[5, 6]);
        let (mut ids, data, _) = tgt.into_parts();
        for id in &mut ids {
            id.replace_range(0..1, "h");
        }
        let tgt = EmbeddingMatrix::new(ids, data, dim).unwrap();
        let retrieval = RetrievalParams { probes: 4, top_k: 1 };
        let out = mine_monolingual(&tgt, &index, &src, &ThresholdPolicy::default(), retrieval).unwrap();
        for p in &out.pairs {
            let exact = dot(tgt.get(&p.tgt_id).unwrap(), src.get(&p.src_id).unwrap());
            assert!((p.las.0 - exact).abs() < 1e-6);
            assert!(p.approx_score.is_some());
            assert!(p.las.0 >= 0.8);
        }
        assert_eq!(out.report.targets, 2);

        let empty = IvfPqIndex::train(&src, &params).unwrap();
        assert_eq!(
            mine_monolingual(&tgt, &empty, &src, &ThresholdPolicy::default(), retrieval),
            Err(Error::EmptyIndex)
        );
    }

    #[test]
    fn policy_validation() {
        assert!(ThresholdPolicy::default().validate().is_ok());
        let bad = ThresholdPolicy {
            comparable: 1.0,
            ..ThresholdPolicy::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(ThresholdPolicy::default().for_mode(MiningMode::Monolingual), 0.80);
        assert_eq!(vec!["comparable", "docpair", "monolingual"],
            [MiningMode::Comparable, MiningMode::Docpair, MiningMode::Monolingual]
                .iter().map(|m| m.as_str()).collect::<Vec<_>>());
    }
}
