//! Script-gated character-trigram language identification.
//!
//! Most target languages own their script outright, so the dominant script
//! decides. Scripts shared by several languages (Devanagari for hi/mr,
//! Bengali for as/bn) fall back to a naive-Bayes trigram model trained on
//! small bundled samples.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lang::{LanguageCode, Script, DEFAULT_LANGUAGES};
use crate::refine::{Detection, LanguageDetector};

const SEEDS: [(&str, &str); 4] = [
    ("hi", include_str!("../data/langid/hi.txt")),
    ("mr", include_str!("../data/langid/mr.txt")),
    ("bn", include_str!("../data/langid/bn.txt")),
    ("as", include_str!("../data/langid/as.txt")),
];

type Trigram = [char; 3];

fn trigrams(text: &str) -> impl Iterator<Item = Trigram> + '_ {
    text.split_whitespace().flat_map(|w| {
        let padded: Vec<char> = core::iter::once(' ')
            .chain(w.chars().flat_map(char::to_lowercase))
            .chain(core::iter::once(' '))
            .collect();
        padded
            .windows(3)
            .map(|t| [t[0], t[1], t[2]])
            .collect::<Vec<_>>()
    })
}

#[derive(Debug, Clone, Default)]
pub struct TrigramModel {
    counts: BTreeMap<Trigram, u32>,
    total: u64,
}

impl TrigramModel {
    pub fn train(text: &str) -> Self {
        let mut m = Self::default();
        m.update(text);
        m
    }

    pub fn update(&mut self, text: &str) {
        for t in trigrams(text) {
            *self.counts.entry(t).or_default() += 1;
            self.total += 1;
        }
    }

    /// Add-one smoothed log-likelihood of `text`.
    pub fn log_likelihood(&self, text: &str, vocab: usize) -> f64 {
        let denom = libm::log((self.total + vocab as u64) as f64);
        trigrams(text)
            .map(|t| {
                let c = self.counts.get(&t).copied().unwrap_or(0);
                libm::log(f64::from(c) + 1.0) - denom
            })
            .sum()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &Trigram> {
        self.counts.keys()
    }
}

#[derive(Debug, Clone)]
pub struct NgramDetector {
    languages: Vec<LanguageCode>,
    models: BTreeMap<LanguageCode, TrigramModel>,
}

impl Default for NgramDetector {
    fn default() -> Self {
        Self::builtin()
    }
}

impl NgramDetector {
    /// All default languages, with the bundled models for shared scripts.
    pub fn builtin() -> Self {
        let mut d = Self {
            languages: DEFAULT_LANGUAGES
                .iter()
                .map(|l| LanguageCode::new(l).expect("valid tag"))
                .collect(),
            models: BTreeMap::new(),
        };
        for (lang, text) in SEEDS {
            d.train(&LanguageCode::new(lang).expect("valid tag"), text);
        }
        d
    }

    pub fn empty(languages: Vec<LanguageCode>) -> Self {
        Self {
            languages,
            models: BTreeMap::new(),
        }
    }

    /// Adds training text for `lang`, registering it if needed.
    pub fn train(&mut self, lang: &LanguageCode, text: &str) {
        if !self.languages.contains(lang) {
            self.languages.push(lang.clone());
        }
        self.models.entry(lang.clone()).or_default().update(text);
    }

    pub fn languages(&self) -> &[LanguageCode] {
        &self.languages
    }

    /// Dominant script among letters and its share of them.
    pub fn dominant_script(text: &str) -> Option<(Script, f64)> {
        let mut counts: BTreeMap<Script, usize> = BTreeMap::new();
        let mut total = 0usize;
        for c in text.chars() {
            if let Some(s) = Script::of(c) {
                *counts.entry(s).or_default() += 1;
                total += 1;
            }
        }
        counts
            .into_iter()
            .max_by_key(|&(s, n)| (n, core::cmp::Reverse(s)))
            .map(|(s, n)| (s, n as f64 / total as f64))
    }

    fn classify(&self, text: &str, candidates: &[&LanguageCode]) -> Result<(LanguageCode, f64)> {
        let scored: Vec<(&LanguageCode, &TrigramModel)> = candidates
            .iter()
            .filter_map(|l| self.models.get(*l).map(|m| (*l, m)))
            .collect();
        if scored.len() < candidates.len() {
            let missing: Vec<_> = candidates
                .iter()
                .filter(|l| !self.models.contains_key(**l))
                .map(|l| l.as_str())
                .collect();
            return Err(Error::DetectorUnavailable(alloc::format!(
                "no trigram model for {}",
                missing.join(",")
            )));
        }
        let mut vocab: Vec<&Trigram> = scored.iter().flat_map(|(_, m)| m.vocabulary()).collect();
        vocab.sort_unstable();
        vocab.dedup();
        let v = vocab.len() + 1;
        let lls: Vec<f64> = scored.iter().map(|(_, m)| m.log_likelihood(text, v)).collect();
        let best = lls
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
            .expect("at least two candidates");
        // Posterior under a uniform prior.
        let z: f64 = lls.iter().map(|l| libm::exp(l - lls[best])).sum();
        Ok((scored[best].0.clone(), 1.0 / z))
    }
}

impl LanguageDetector for NgramDetector {
    fn detect(&self, text: &str, expected: &LanguageCode) -> Result<Detection> {
        let Some((script, share)) = Self::dominant_script(text) else {
            // Digits and punctuation only: nothing to contradict.
            return Ok(Detection {
                lang: expected.clone(),
                confidence: 0.0,
            });
        };
        let candidates: Vec<&LanguageCode> = self
            .languages
            .iter()
            .filter(|l| l.script() == Some(script))
            .collect();
        match candidates.as_slice() {
            [] => Ok(Detection {
                lang: LanguageCode::new("und").expect("valid tag"),
                confidence: share,
            }),
            [only] => Ok(Detection {
                lang: (*only).clone(),
                confidence: share,
            }),
            many => {
                let (lang, p) = self.classify(text, many)?;
                Ok(Detection {
                    lang,
                    confidence: share * p,
                })
            }
        }
    }
}
