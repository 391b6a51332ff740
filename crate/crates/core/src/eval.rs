//! Human-evaluation tooling: band stratified sampling, annotation batches,
//! Spearman correlation and the per-band STS report.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::refine::{word_count, MinedPair};

pub const BATCH_SIZE: usize = 30;
pub const BAND_WIDTH: f64 = 0.1;
/// STS at or above this counts as a correct alignment.
pub const ACCURATE_STS: f64 = 4.0;
/// Slack for boundary comparisons, so that `0.8 - 0.1` and a stored `0.7`
/// land on the same side.
const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LasBand {
    DefiniteAccept,
    MarginalAccept,
    Reject,
}

impl LasBand {
    pub const ALL: [LasBand; 3] = [Self::DefiniteAccept, Self::MarginalAccept, Self::Reject];

    /// Band of `las` relative to `threshold`; `None` below `threshold - 0.1`.
    ///
    /// definite: las > t+0.1, marginal: t < las ≤ t+0.1,
    /// reject: t-0.1 ≤ las ≤ t.
    pub fn classify(las: f64, threshold: f64) -> Option<LasBand> {
        let upper = threshold + BAND_WIDTH;
        let lower = threshold - BAND_WIDTH;
        if las > upper + BOUNDARY_EPS {
            Some(Self::DefiniteAccept)
        } else if las > threshold + BOUNDARY_EPS {
            Some(Self::MarginalAccept)
        } else if las >= lower - BOUNDARY_EPS {
            Some(Self::Reject)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::DefiniteAccept => "definite_accept",
            Self::MarginalAccept => "marginal_accept",
            Self::Reject => "reject",
        }
    }

    pub fn is_accept(self) -> bool {
        self != Self::Reject
    }
}

impl fmt::Display for LasBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LasBand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown band {s:?}")))
    }
}

/// A 0–5 semantic textual similarity judgement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "u8", into = "u8"))]
pub struct StsScore(u8);

impl StsScore {
    pub fn new(value: u8) -> Result<Self> {
        if value > 5 {
            return Err(Error::InvalidParameter(format!("STS {value} outside 0..=5")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for StsScore {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<StsScore> for u8 {
    fn from(s: StsScore) -> u8 {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSample {
    pub sample_id: String,
    pub pair: MinedPair,
    pub band: LasBand,
    pub batch_id: usize,
}

impl AnnotationSample {
    pub fn key(&self) -> SampleKey {
        SampleKey {
            sample_id: self.sample_id.clone(),
            batch_id: self.batch_id,
            band: self.band,
            las: self.pair.las.value(),
            language: language_label(&self.pair),
            en_words: self.pair.english_text().map_or(0, word_count),
        }
    }
}

/// Column label for a pair: the non-English language, or `src-tgt`.
pub fn language_label(pair: &MinedPair) -> String {
    match pair.other_side() {
        Some((lang, _)) => lang.as_str().to_string(),
        None => format!("{}-{}", pair.src_lang.as_str(), pair.tgt_lang.as_str()),
    }
}

/// What the analysis needs to know about a sample; kept apart from the
/// texts shown to annotators.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleKey {
    pub sample_id: String,
    pub batch_id: usize,
    pub band: LasBand,
    pub las: f64,
    pub language: String,
    pub en_words: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleReport {
    pub threshold: f64,
    pub n_per_band: usize,
    pub available: BTreeMap<String, usize>,
    pub drawn: BTreeMap<String, usize>,
    pub below_range: usize,
    pub batches: usize,
    pub warnings: Vec<String>,
}

/// Draws `n_per_band` pairs uniformly from each band (all of them when a
/// band is short), shuffles the union and packs it into batches of 30.
pub fn stratified_sample(
    pairs: &[MinedPair],
    threshold: f64,
    n_per_band: usize,
    seed: u64,
) -> (Vec<AnnotationSample>, SampleReport) {
    let mut report = SampleReport {
        threshold,
        n_per_band,
        ..SampleReport::default()
    };
    let mut members: BTreeMap<LasBand, Vec<usize>> = LasBand::ALL.iter().map(|b| (*b, Vec::new())).collect();
    for (i, p) in pairs.iter().enumerate() {
        match LasBand::classify(p.las.value(), threshold) {
            Some(b) => members.get_mut(&b).expect("all bands present").push(i),
            None => report.below_range += 1,
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<(usize, LasBand)> = Vec::new();
    for (band, idx) in &members {
        report.available.insert(band.to_string(), idx.len());
        let take = if idx.len() < n_per_band {
            report.warnings.push(format!(
                "band {band} has {} pairs, fewer than the {n_per_band} requested; taking all",
                idx.len()
            ));
            idx.len()
        } else {
            n_per_band
        };
        let mut picks = index::sample(&mut rng, idx.len(), take).into_vec();
        picks.sort_unstable();
        chosen.extend(picks.into_iter().map(|j| (idx[j], *band)));
        report.drawn.insert(band.to_string(), take);
    }
    chosen.shuffle(&mut rng);
    let samples: Vec<AnnotationSample> = chosen
        .into_iter()
        .enumerate()
        .map(|(pos, (i, band))| AnnotationSample {
            sample_id: format!("s{pos:06}"),
            pair: pairs[i].clone(),
            band,
            batch_id: pos / BATCH_SIZE,
        })
        .collect();
    report.batches = samples.len().div_ceil(BATCH_SIZE);
    (samples, report)
}

/// Pools samples drawn separately (say, per corpus), shuffles them
/// together and renumbers ids and batches.
pub fn merge_samples(groups: Vec<Vec<AnnotationSample>>, seed: u64) -> Vec<AnnotationSample> {
    let mut all: Vec<AnnotationSample> = groups.into_iter().flatten().collect();
    all.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    for (pos, s) in all.iter_mut().enumerate() {
        s.sample_id = format!("s{pos:06}");
        s.batch_id = pos / BATCH_SIZE;
    }
    all
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = alloc::vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0)
}

/// Spearman's rank correlation (Pearson over average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateInput("need at least two observations"));
    }
    let constant = |v: &[f64]| v.iter().all(|x| *x == v[0]);
    if constant(xs) || constant(ys) {
        return Err(Error::DegenerateInput("constant series"));
    }
    Ok(pearson(&average_ranks(xs), &average_ranks(ys)))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Annotation {
    pub sample_id: String,
    pub annotator_id: String,
    pub sts: StsScore,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BandStats {
    pub samples: usize,
    pub mean_sts: Option<f64>,
    pub median_sts: Option<f64>,
    /// Share of samples whose mean STS is at least 4.
    pub accuracy: Option<f64>,
}

impl BandStats {
    fn from_scores(scores: &[f64]) -> Self {
        if scores.is_empty() {
            return Self::default();
        }
        let n = scores.len() as f64;
        let mut sorted = scores.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        };
        Self {
            samples: scores.len(),
            mean_sts: Some(scores.iter().sum::<f64>() / n),
            median_sts: Some(median),
            accuracy: Some(scores.iter().filter(|s| **s >= ACCURATE_STS).count() as f64 / n),
        }
    }
}

/// "All accept" pooled two ways: over every accepted sample, and as the
/// unweighted average of the definite and marginal figures.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AllAccept {
    pub pooled: BandStats,
    pub equal_weight_mean_sts: Option<f64>,
    pub equal_weight_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnalysisTable {
    pub bands: BTreeMap<String, BandStats>,
    pub all_accept: AllAccept,
    pub spearman_las_sts: Option<f64>,
    pub spearman_las_length: Option<f64>,
    pub spearman_sts_length: Option<f64>,
    /// Share of multiply annotated samples whose scores span at most 1.
    pub agreement_within_1: Option<f64>,
    pub multiply_annotated: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnalysisReport {
    pub overall: AnalysisTable,
    pub per_language: BTreeMap<String, AnalysisTable>,
    pub unannotated_samples: Vec<String>,
    pub unknown_annotations: usize,
}

struct Scored<'a> {
    key: &'a SampleKey,
    mean: f64,
    min: u8,
    max: u8,
    count: usize,
}

fn mean_of(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn table(rows: &[&Scored<'_>]) -> AnalysisTable {
    let mut t = AnalysisTable::default();
    for band in LasBand::ALL {
        let scores: Vec<f64> = rows.iter().filter(|r| r.key.band == band).map(|r| r.mean).collect();
        t.bands.insert(band.to_string(), BandStats::from_scores(&scores));
    }
    let accepted: Vec<f64> = rows.iter().filter(|r| r.key.band.is_accept()).map(|r| r.mean).collect();
    let d = &t.bands[LasBand::DefiniteAccept.as_str()];
    let m = &t.bands[LasBand::MarginalAccept.as_str()];
    let avg2 = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => Some((a + b) / 2.0),
        _ => None,
    };
    t.all_accept = AllAccept {
        pooled: BandStats::from_scores(&accepted),
        equal_weight_mean_sts: avg2(d.mean_sts, m.mean_sts),
        equal_weight_accuracy: avg2(d.accuracy, m.accuracy),
    };
    let las: Vec<f64> = rows.iter().map(|r| r.key.las).collect();
    let sts: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let len: Vec<f64> = rows.iter().map(|r| r.key.en_words as f64).collect();
    t.spearman_las_sts = spearman(&las, &sts).ok();
    t.spearman_las_length = spearman(&las, &len).ok();
    t.spearman_sts_length = spearman(&sts, &len).ok();
    let multi: Vec<&&Scored<'_>> = rows.iter().filter(|r| r.count >= 2).collect();
    t.multiply_annotated = multi.len();
    t.agreement_within_1 = (!multi.is_empty()).then(|| {
        multi.iter().filter(|r| r.max - r.min <= 1).count() as f64 / multi.len() as f64
    });
    t
}

/// Per-language and overall statistics in the shape of a per-band STS
/// table. Every figure is recomputed from the raw annotations.
pub fn analysis_report(keys: &[SampleKey], annotations: &[Annotation]) -> AnalysisReport {
    let mut by_sample: BTreeMap<&str, Vec<u8>> = keys.iter().map(|k| (k.sample_id.as_str(), Vec::new())).collect();
    let mut report = AnalysisReport::default();
    for a in annotations {
        match by_sample.get_mut(a.sample_id.as_str()) {
            Some(v) => v.push(a.sts.value()),
            None => report.unknown_annotations += 1,
        }
    }
    let mut scored = Vec::with_capacity(keys.len());
    for k in keys {
        let v = &by_sample[k.sample_id.as_str()];
        if v.is_empty() {
            report.unannotated_samples.push(k.sample_id.clone());
            continue;
        }
        scored.push(Scored {
            key: k,
            mean: mean_of(&v.iter().map(|s| f64::from(*s)).collect::<Vec<_>>()).expect("nonempty"),
            min: *v.iter().min().expect("nonempty"),
            max: *v.iter().max().expect("nonempty"),
            count: v.len(),
        });
    }
    let all: Vec<&Scored<'_>> = scored.iter().collect();
    report.overall = table(&all);
    let mut langs: BTreeMap<&str, Vec<&Scored<'_>>> = BTreeMap::new();
    for s in &scored {
        langs.entry(s.key.language.as_str()).or_default().push(s);
    }
    report.per_language = langs.into_iter().map(|(l, rows)| (l.to_string(), table(&rows))).collect();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::LasScore;
    use crate::lang::LanguageCode;
    use crate::mine::MiningMode;
    use crate::refine::Provenance;
    use alloc::vec;

    fn pair(i: usize, las: f64) -> MinedPair {
        MinedPair {
            src_id: format!("en:{i}"),
            tgt_id: format!("hi:{i}"),
            src_lang: LanguageCode::english(),
            tgt_lang: LanguageCode::new("hi").unwrap(),
            src_text: format!("sentence number {i} here"),
            tgt_text: format!("वाक्य {i}"),
            las: LasScore(las),
            provenance: Provenance::new("t", MiningMode::Comparable, "global:*"),
        }
    }

    #[test]
    fn band_examples() {
        assert_eq!(LasBand::classify(0.86, 0.75), Some(LasBand::DefiniteAccept));
        assert_eq!(LasBand::classify(0.75 + 0.1, 0.75), Some(LasBand::MarginalAccept));
        assert_eq!(LasBand::classify(0.75, 0.75), Some(LasBand::Reject));
        assert_eq!(LasBand::classify(0.65, 0.75), Some(LasBand::Reject));
        assert_eq!(LasBand::classify(0.7, 0.8), Some(LasBand::Reject));
        assert_eq!(LasBand::classify(0.64, 0.75), None);
        assert_eq!("reject".parse::<LasBand>().unwrap(), LasBand::Reject);
    }

    #[test]
    fn ninety_samples_three_batches() {
        let pairs: Vec<_> = (0..300).map(|i| pair(i, 0.65 + 0.35 * i as f64 / 300.0)).collect();
        let (s, r) = stratified_sample(&pairs, 0.75, 30, 1);
        assert_eq!(s.len(), 90);
        assert_eq!(r.batches, 3);
        for b in 0..3 {
            assert_eq!(s.iter().filter(|x| x.batch_id == b).count(), 30);
        }
        for band in LasBand::ALL {
            assert_eq!(s.iter().filter(|x| x.band == band).count(), 30);
        }
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn shortfall_warns() {
        let pairs = vec![pair(0, 0.9), pair(1, 0.8), pair(2, 0.5)];
        let (s, r) = stratified_sample(&pairs, 0.75, 5, 0);
        assert_eq!(s.len(), 2);
        assert_eq!(r.below_range, 1);
        assert_eq!(r.warnings.len(), 3);
    }

    #[test]
    fn sampling_is_uniform() {
        // 6 definite-accept pairs, 2 drawn: each pair should be picked in 1/3 of runs.
        let pairs: Vec<_> = (0..6).map(|i| pair(i, 0.95)).collect();
        let mut hits = [0u64; 6];
        let runs = 6000;
        for seed in 0..runs {
            for s in stratified_sample(&pairs, 0.75, 2, seed).0 {
                hits[s.pair.src_id[3..].parse::<usize>().unwrap()] += 1;
            }
        }
        let expected = runs as f64 * 2.0 / 6.0;
        let chi2: f64 = hits.iter().map(|&h| (h as f64 - expected).powi(2) / expected).sum();
        // 5 degrees of freedom, p = 0.001
        assert!(chi2 < 20.52, "{hits:?} chi2 {chi2}");
    }

    #[test]
    fn merged_batches_are_renumbered() {
        let pairs: Vec<_> = (0..120).map(|i| pair(i, 0.65 + 0.35 * i as f64 / 120.0)).collect();
        let a = stratified_sample(&pairs[..60], 0.75, 10, 1).0;
        let b = stratified_sample(&pairs[60..], 0.75, 10, 2).0;
        let (na, nb) = (a.len(), b.len());
        let m = merge_samples(vec![a, b], 3);
        assert_eq!(m.len(), na + nb);
        assert!(m.iter().enumerate().all(|(i, s)| s.batch_id == i / BATCH_SIZE));
        assert_eq!(m[0].sample_id, "s000000");
    }

    #[test]
    fn spearman_examples() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&xs, &xs).unwrap(), 1.0);
        assert_eq!(spearman(&xs, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!((spearman(&xs, &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(spearman(&xs, &[1.0]), Err(Error::LengthMismatch(4, 1)));
        assert!(matches!(spearman(&xs, &[2.0; 4]), Err(Error::DegenerateInput(_))));
        assert!(matches!(spearman(&[1.0], &[1.0]), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    fn keys(n: usize) -> Vec<SampleKey> {
        (0..n)
            .map(|i| SampleKey {
                sample_id: format!("s{i}"),
                batch_id: 0,
                band: LasBand::ALL[i % 3],
                las: 0.7 + i as f64 / 100.0,
                language: if i % 2 == 0 { "hi".into() } else { "ta".into() },
                en_words: 4 + (i * 7) % 11,
            })
            .collect()
    }

    fn ann(id: &str, who: &str, v: u8) -> Annotation {
        Annotation {
            sample_id: id.into(),
            annotator_id: who.into(),
            sts: StsScore::new(v).unwrap(),
        }
    }

    #[test]
    fn all_fives() {
        let k = keys(12);
        let a: Vec<_> = k.iter().map(|k| ann(&k.sample_id, "a", 5)).collect();
        let r = analysis_report(&k, &a);
        for b in r.overall.bands.values() {
            assert_eq!(b.mean_sts, Some(5.0));
            assert_eq!(b.accuracy, Some(1.0));
        }
        assert_eq!(r.overall.all_accept.pooled.accuracy, Some(1.0));
        assert_eq!(r.overall.agreement_within_1, None);
        assert_eq!(r.overall.spearman_las_sts, None);
    }

    #[test]
    fn agreement_within_one() {
        let k = keys(9);
        let a: Vec<_> = k
            .iter()
            .flat_map(|k| [ann(&k.sample_id, "a", 4), ann(&k.sample_id, "b", 5)])
            .collect();
        let r = analysis_report(&k, &a);
        assert_eq!(r.overall.agreement_within_1, Some(1.0));
        assert_eq!(r.overall.bands["reject"].mean_sts, Some(4.5));
        assert_eq!(r.per_language.len(), 2);
    }

    #[test]
    fn poolings_differ_on_unequal_bands() {
        let mut k = keys(3);
        k[0].band = LasBand::DefiniteAccept;
        k[1].band = LasBand::DefiniteAccept;
        k[2].band = LasBand::MarginalAccept;
        let a = vec![ann("s0", "a", 5), ann("s1", "a", 5), ann("s2", "a", 2)];
        let r = analysis_report(&k, &a);
        assert_eq!(r.overall.all_accept.pooled.mean_sts, Some(4.0));
        assert_eq!(r.overall.all_accept.equal_weight_mean_sts, Some(3.5));
        assert!(StsScore::new(6).is_err());
    }
}
