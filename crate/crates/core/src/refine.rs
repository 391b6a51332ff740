//! Post-mining filters, held-out decontamination and English-pivot joins.
//!
//! The filters run in the order threshold → length → language id → dedup.
//! Threshold filtering happens inside the miner; [`refine_pairs`] applies
//! the remaining three.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::embedding::LasScore;
use crate::error::{Error, Result};
use crate::lang::LanguageCode;
use crate::mine::MiningMode;
use crate::segment::collapse_whitespace;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Provenance {
    pub source: String,
    pub mode: String,
    pub bucket: String,
}

impl Provenance {
    pub fn new(source: &str, mode: MiningMode, bucket: &str) -> Self {
        Self {
            source: source.to_string(),
            mode: mode.as_str().to_string(),
            bucket: bucket.to_string(),
        }
    }
}

/// An aligned sentence pair with its texts.
#[derive(Debug, Clone, PartialEq)]
pub struct MinedPair {
    pub src_id: String,
    pub tgt_id: String,
    pub src_lang: LanguageCode,
    pub tgt_lang: LanguageCode,
    pub src_text: String,
    pub tgt_text: String,
    pub las: LasScore,
    pub provenance: Provenance,
}

impl MinedPair {
    /// The English text, if either side is English.
    pub fn english_text(&self) -> Option<&str> {
        if self.src_lang.is_english() {
            Some(&self.src_text)
        } else if self.tgt_lang.is_english() {
            Some(&self.tgt_text)
        } else {
            None
        }
    }

    /// The non-English side of an English-centric pair.
    pub fn other_side(&self) -> Option<(&LanguageCode, &str)> {
        if self.src_lang.is_english() {
            Some((&self.tgt_lang, &self.tgt_text))
        } else if self.tgt_lang.is_english() {
            Some((&self.src_lang, &self.src_text))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct FilterConfig {
    pub min_en_words: usize,
    pub langid_enabled: bool,
    /// Fail instead of skipping the filter when no detector is available.
    pub langid_hard_fail: bool,
    pub dedup_enabled: bool,
    pub rng_seed: u64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            min_en_words: 4,
            langid_enabled: true,
            langid_hard_fail: false,
            dedup_enabled: true,
            rng_seed: 0,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_en_words == 0 {
            return Err(Error::InvalidParameter("min_en_words must be at least 1".into()));
        }
        Ok(())
    }
}

/// Drops pairs whose source and target texts both repeat an earlier pair.
/// The first occurrence is kept.
pub fn dedup_exact(pairs: Vec<MinedPair>) -> Vec<MinedPair> {
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    pairs
        .into_iter()
        .filter(|p| seen.insert((p.src_text.clone(), p.tgt_text.clone())))
        .collect()
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Removes pairs whose English side has fewer than `min_en_words` words.
/// Pairs without an English side pass through.
pub fn filter_min_length(pairs: Vec<MinedPair>, cfg: &FilterConfig) -> Vec<MinedPair> {
    pairs
        .into_iter()
        .filter(|p| p.english_text().is_none_or(|en| word_count(en) >= cfg.min_en_words))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub lang: LanguageCode,
    pub confidence: f64,
}

/// Pluggable language identification.
pub trait LanguageDetector {
    fn detect(&self, text: &str, expected: &LanguageCode) -> Result<Detection>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LangIdReport {
    pub checked: usize,
    pub removed: usize,
    pub skipped: bool,
    pub warning: Option<String>,
}

/// Removes pairs where either side is detected as a different language.
///
/// If the detector reports itself unavailable the filter is skipped with a
/// warning, or fails when `hard_fail` is set.
pub fn filter_langid<D: LanguageDetector + ?Sized>(
    pairs: Vec<MinedPair>,
    detector: &D,
    hard_fail: bool,
) -> Result<(Vec<MinedPair>, LangIdReport)> {
    let mut report = LangIdReport::default();
    let mut kept = Vec::with_capacity(pairs.len());
    let mut iter = pairs.into_iter();
    while let Some(p) = iter.next() {
        let verdict = detector
            .detect(&p.src_text, &p.src_lang)
            .and_then(|s| Ok((s, detector.detect(&p.tgt_text, &p.tgt_lang)?)));
        match verdict {
            Ok((s, t)) => {
                report.checked += 1;
                if s.lang == p.src_lang && t.lang == p.tgt_lang {
                    kept.push(p);
                } else {
                    report.removed += 1;
                }
            }
            Err(Error::DetectorUnavailable(msg)) if !hard_fail => {
                // Keep everything, including what was already judged.
                report.skipped = true;
                report.warning = Some(msg);
                report.removed = 0;
                let mut all = Vec::new();
                all.append(&mut kept);
                all.push(p);
                all.extend(iter);
                return Ok((all, report));
            }
            Err(e) => return Err(e),
        }
    }
    Ok((kept, report))
}

/// Lowercase, drop every Unicode punctuation character, collapse spaces.
pub fn normalize_for_overlap(text: &str) -> String {
    let mut lowered = String::with_capacity(text.len());
    for c in text.chars() {
        let punct = matches!(
            get_general_category(c),
            GeneralCategory::ConnectorPunctuation
                | GeneralCategory::DashPunctuation
                | GeneralCategory::OpenPunctuation
                | GeneralCategory::ClosePunctuation
                | GeneralCategory::InitialPunctuation
                | GeneralCategory::FinalPunctuation
                | GeneralCategory::OtherPunctuation
        );
        if !punct {
            lowered.extend(c.to_lowercase());
        }
    }
    collapse_whitespace(&lowered)
}

/// Validation/test sentences of one En–X set, stored normalized.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeldOutSet {
    pub name: String,
    pub other_lang: Option<LanguageCode>,
    english: BTreeSet<String>,
    other: BTreeSet<String>,
}

impl HeldOutSet {
    pub fn new(name: &str, other_lang: LanguageCode) -> Self {
        Self {
            name: name.to_string(),
            other_lang: Some(other_lang),
            ..Self::default()
        }
    }

    pub fn add_english(&mut self, sentence: &str) {
        let n = normalize_for_overlap(sentence);
        if !n.is_empty() {
            self.english.insert(n);
        }
    }

    pub fn add_other(&mut self, sentence: &str) {
        let n = normalize_for_overlap(sentence);
        if !n.is_empty() {
            self.other.insert(n);
        }
    }

    pub fn contains_english(&self, normalized: &str) -> bool {
        self.english.contains(normalized)
    }

    pub fn contains_other(&self, normalized: &str) -> bool {
        self.other.contains(normalized)
    }

    pub fn len(&self) -> usize {
        self.english.len() + self.other.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecontaminationReport {
    pub checked: usize,
    pub removed: usize,
    /// Pairs matched per held-out set; a pair can count under several sets.
    pub removed_per_set: BTreeMap<String, usize>,
}

/// Removes pairs overlapping held-out data after normalization: the English
/// side may not appear in any set, and the other side may not appear in the
/// set for its own language.
pub fn decontaminate(
    pairs: Vec<MinedPair>,
    heldout: &[HeldOutSet],
) -> (Vec<MinedPair>, DecontaminationReport) {
    let mut report = DecontaminationReport {
        removed_per_set: heldout.iter().map(|s| (s.name.clone(), 0)).collect(),
        ..DecontaminationReport::default()
    };
    let mut kept = Vec::with_capacity(pairs.len());
    for p in pairs {
        report.checked += 1;
        let en = p.english_text().map(normalize_for_overlap);
        let other = p.other_side().map(|(l, t)| (l, normalize_for_overlap(t)));
        let mut hit = false;
        for set in heldout {
            let by_english = en.as_deref().is_some_and(|e| set.contains_english(e));
            let by_other = other.as_ref().is_some_and(|(lang, text)| {
                set.other_lang.as_ref() == Some(*lang) && set.contains_other(text)
            });
            if by_english || by_other {
                hit = true;
                *report.removed_per_set.entry(set.name.clone()).or_default() += 1;
            }
        }
        if hit {
            report.removed += 1;
        } else {
            kept.push(p);
        }
    }
    (kept, report)
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RefineReport {
    pub input: usize,
    pub after_length: usize,
    pub after_langid: usize,
    pub after_dedup: usize,
    pub langid: Option<LangIdReport>,
    pub filters_applied: Vec<String>,
}

/// Length → language id → dedup over threshold-filtered pairs.
pub fn refine_pairs(
    pairs: Vec<MinedPair>,
    cfg: &FilterConfig,
    detector: Option<&dyn LanguageDetector>,
) -> Result<(Vec<MinedPair>, RefineReport)> {
    cfg.validate()?;
    let mut report = RefineReport {
        input: pairs.len(),
        ..RefineReport::default()
    };
    let pairs = filter_min_length(pairs, cfg);
    report.after_length = pairs.len();
    report
        .filters_applied
        .push(alloc::format!("min_en_words={}", cfg.min_en_words));
    let pairs = if cfg.langid_enabled {
        let (kept, lr) = match detector {
            Some(d) => filter_langid(pairs, d, cfg.langid_hard_fail)?,
            None if cfg.langid_hard_fail => {
                return Err(Error::DetectorUnavailable("no detector configured".into()))
            }
            None => (
                pairs,
                LangIdReport {
                    skipped: true,
                    warning: Some("no detector configured".into()),
                    ..LangIdReport::default()
                },
            ),
        };
        if !lr.skipped {
            report.filters_applied.push("langid".to_string());
        }
        report.langid = Some(lr);
        kept
    } else {
        pairs
    };
    report.after_langid = pairs.len();
    let pairs = if cfg.dedup_enabled {
        report.filters_applied.push("dedup_exact".to_string());
        dedup_exact(pairs)
    } else {
        pairs
    };
    report.after_dedup = pairs.len();
    Ok((pairs, report))
}

/// A pivoted A–B pair with the provenance of both English-centric pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotPair {
    pub pair: MinedPair,
    pub left: Provenance,
    pub right: Provenance,
    pub pivot_text: String,
}

/// Joins En–A and En–B pairs on identical English text (after whitespace
/// collapse). Each shared English sentence with `m` A-sentences and `n`
/// B-sentences yields exactly one of the `m·n` combinations, drawn
/// uniformly with a generator seeded by `seed`. The pivoted score is the
/// smaller of the two constituent scores.
pub fn pivot_extract(corpus_a: &[MinedPair], corpus_b: &[MinedPair], seed: u64) -> Vec<PivotPair> {
    type Groups<'a> = BTreeMap<String, (Vec<&'a MinedPair>, Vec<&'a MinedPair>)>;
    let mut groups: Groups<'_> = BTreeMap::new();
    for p in corpus_a {
        if let Some(en) = p.english_text() {
            groups.entry(collapse_whitespace(en)).or_default().0.push(p);
        }
    }
    for p in corpus_b {
        if let Some(en) = p.english_text() {
            if let Some(g) = groups.get_mut(&collapse_whitespace(en)) {
                g.1.push(p);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (pivot_text, (left, right)) in groups {
        if left.is_empty() || right.is_empty() {
            continue;
        }
        let pick = rng.gen_range(0..left.len() * right.len());
        let (a, b) = (left[pick / right.len()], right[pick % right.len()]);
        let (a_lang, a_text) = a.other_side().expect("English-centric");
        let (b_lang, b_text) = b.other_side().expect("English-centric");
        let a_id = if a.src_lang.is_english() { &a.tgt_id } else { &a.src_id };
        let b_id = if b.src_lang.is_english() { &b.tgt_id } else { &b.src_id };
        out.push(PivotPair {
            pair: MinedPair {
                src_id: a_id.clone(),
                tgt_id: b_id.clone(),
                src_lang: a_lang.clone(),
                tgt_lang: b_lang.clone(),
                src_text: a_text.to_string(),
                tgt_text: b_text.to_string(),
                las: LasScore(a.las.value().min(b.las.value())),
                provenance: Provenance {
                    source: "pivot".to_string(),
                    mode: "pivot".to_string(),
                    bucket: String::new(),
                },
            },
            left: a.provenance.clone(),
            right: b.provenance.clone(),
            pivot_text,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    pub(crate) fn pair(src: &str, tgt: &str, tgt_lang: &str) -> MinedPair {
        MinedPair {
            src_id: format!("e:{src}"),
            tgt_id: format!("{tgt_lang}:{tgt}"),
            src_lang: LanguageCode::english(),
            tgt_lang: LanguageCode::new(tgt_lang).unwrap(),
            src_text: src.to_string(),
            tgt_text: tgt.to_string(),
            las: LasScore(0.9),
            provenance: Provenance::new("test", MiningMode::Comparable, "month:2021-01"),
        }
    }

    #[test]
    fn dedup_examples() {
        let out = dedup_exact(vec![pair("a", "b", "hi"), pair("a", "b", "hi")]);
        assert_eq!(out.len(), 1);
        let out = dedup_exact(vec![pair("a", "b", "hi"), pair("a", "c", "hi")]);
        assert_eq!(out.len(), 2);
        assert!(dedup_exact(vec![]).is_empty());
    }

    #[test]
    fn length_rule() {
        let cfg = FilterConfig::default();
        assert!(filter_min_length(vec![pair("I am here", "x", "hi")], &cfg).is_empty());
        assert_eq!(filter_min_length(vec![pair("I am right here", "x", "hi")], &cfg).len(), 1);
        let floor = FilterConfig {
            min_en_words: 1,
            ..cfg
        };
        assert_eq!(filter_min_length(vec![pair("Hi", "x", "hi")], &floor).len(), 1);
        assert!(FilterConfig { min_en_words: 0, ..cfg }.validate().is_err());
    }

    struct Fixed(&'static str);

    impl LanguageDetector for Fixed {
        fn detect(&self, _text: &str, expected: &LanguageCode) -> Result<Detection> {
            let lang = if expected.is_english() {
                expected.clone()
            } else {
                LanguageCode::new(self.0).unwrap()
            };
            Ok(Detection {
                lang,
                confidence: 1.0,
            })
        }
    }

    struct Offline;

    impl LanguageDetector for Offline {
        fn detect(&self, _: &str, _: &LanguageCode) -> Result<Detection> {
            Err(Error::DetectorUnavailable("offline".into()))
        }
    }

    #[test]
    fn langid_filter() {
        let pairs = vec![pair("one two three four", "x", "hi")];
        let (kept, r) = filter_langid(pairs.clone(), &Fixed("hi"), false).unwrap();
        assert_eq!((kept.len(), r.removed), (1, 0));
        let (kept, r) = filter_langid(pairs.clone(), &Fixed("mr"), false).unwrap();
        assert_eq!((kept.len(), r.removed), (0, 1));
        let (kept, r) = filter_langid(pairs.clone(), &Offline, false).unwrap();
        assert_eq!(kept.len(), 1);
        assert!(r.skipped && r.warning.is_some());
        assert!(filter_langid(pairs, &Offline, true).is_err());
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_for_overlap("Hello, World!"), "hello world");
        assert_eq!(normalize_for_overlap("  «राम»  घर गया। "), "राम घर गया");
        // virama and vowel signs are marks, not punctuation
        assert_eq!(normalize_for_overlap("क्या?"), "क्या");
    }

    fn heldout(name: &str, lang: &str, en: &[&str], other: &[&str]) -> HeldOutSet {
        let mut s = HeldOutSet::new(name, LanguageCode::new(lang).unwrap());
        en.iter().for_each(|e| s.add_english(e));
        other.iter().for_each(|o| s.add_other(o));
        s
    }

    #[test]
    fn decontamination_conditions() {
        let sets = [
            heldout("en-ta", "ta", &["hello world"], &["வணக்கம்"]),
            heldout("en-hi", "hi", &[], &[]),
        ];
        // (i) English side in ANY set, even for an en-hi pair.
        let (kept, r) = decontaminate(vec![pair("Hello, World!", "नमस्ते", "hi")], &sets);
        assert!(kept.is_empty());
        assert_eq!(r.removed_per_set["en-ta"], 1);
        // (ii) is pair-specific: a Hindi pair whose target sits in the en-ta set stays.
        let (kept, _) = decontaminate(vec![pair("other sentence", "வணக்கம்", "hi")], &sets);
        assert_eq!(kept.len(), 1);
        let (kept, _) = decontaminate(vec![pair("other sentence", "வணக்கம்!", "ta")], &sets);
        assert!(kept.is_empty());
    }

    #[test]
    fn decontamination_is_idempotent() {
        let sets = [heldout("en-hi", "hi", &["a b c"], &["x"])];
        let input = vec![pair("A b, c.", "y", "hi"), pair("d e f", "x", "hi"), pair("g", "h", "hi")];
        let (once, _) = decontaminate(input, &sets);
        let (twice, r) = decontaminate(once.clone(), &sets);
        assert_eq!(once, twice);
        assert_eq!(r.removed, 0);
    }

    #[test]
    fn pivot_one_per_group() {
        let a = vec![pair("e1", "h1", "hi"), pair("e1", "h2", "hi"), pair("e2", "h3", "hi")];
        let b = vec![
            pair("e1", "t1", "ta"),
            pair("e1 ", "t2", "ta"),
            pair("e1", "t3", "ta"),
            pair("e3", "t4", "ta"),
        ];
        let out = pivot_extract(&a, &b, 7);
        assert_eq!(out.len(), 1);
        let p = &out[0].pair;
        assert_eq!((p.src_lang.as_str(), p.tgt_lang.as_str()), ("hi", "ta"));
        assert!(["h1", "h2"].contains(&p.src_text.as_str()));
        assert!(["t1", "t2", "t3"].contains(&p.tgt_text.as_str()));
        assert_eq!(out, pivot_extract(&a, &b, 7));
    }

    #[test]
    fn pivot_choice_is_uniform() {
        // m=2, n=3: each of 6 combinations should appear ~1/6 of the time.
        let a = vec![pair("e", "h0", "hi"), pair("e", "h1", "hi")];
        let b = vec![pair("e", "t0", "ta"), pair("e", "t1", "ta"), pair("e", "t2", "ta")];
        let mut counts = BTreeMap::new();
        let trials = 6000u64;
        for seed in 0..trials {
            let p = &pivot_extract(&a, &b, seed)[0].pair;
            *counts
                .entry((p.src_text.clone(), p.tgt_text.clone()))
                .or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 6);
        let expected = trials as f64 / 6.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 5 degrees of freedom, p = 0.001 critical value
        assert!(chi2 < 20.52, "chi2 {chi2}");
    }

    #[test]
    fn pivot_score_is_min() {
        let mut a = pair("e", "h", "hi");
        a.las = LasScore(0.91);
        let mut b = pair("e", "t", "ta");
        b.las = LasScore(0.83);
        let out = pivot_extract(&[a], &[b], 1);
        assert_eq!(out[0].pair.las, LasScore(0.83));
        assert_eq!(out[0].left.source, "test");
    }

    #[test]
    fn refine_order() {
        let input = vec![
            pair("too short", "x", "hi"),
            pair("long enough sentence here", "x", "hi"),
            pair("long enough sentence here", "x", "hi"),
        ];
        let cfg = FilterConfig {
            langid_enabled: false,
            ..FilterConfig::default()
        };
        let (out, r) = refine_pairs(input.clone(), &cfg, None).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((r.input, r.after_length, r.after_dedup), (3, 2, 1));
        // langid on without detector: soft skip
        let (_, r) = refine_pairs(input.clone(), &FilterConfig::default(), None).unwrap();
        assert!(r.langid.unwrap().skipped);
        let hard = FilterConfig {
            langid_hard_fail: true,
            ..FilterConfig::default()
        };
        assert!(refine_pairs(input, &hard, None).is_err());
    }
}
