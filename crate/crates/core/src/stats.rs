//! Corpus size summary: existing vs newly mined pairs per language.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairCounts {
    pub existing: u64,
    pub mined: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.existing + self.mined
    }

    /// `total / existing`, undefined when nothing existed before.
    pub fn increase_factor(&self) -> Option<f64> {
        (self.existing > 0).then(|| self.total() as f64 / self.existing as f64)
    }
}

pub fn format_factor(factor: Option<f64>) -> String {
    match factor {
        Some(f) => format!("{f:.1}"),
        None => String::from("∞/na"),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorpusStats {
    pub pairs: BTreeMap<String, PairCounts>,
}

impl CorpusStats {
    pub fn insert(&mut self, pair: &str, counts: PairCounts) {
        let e = self.pairs.entry(pair.into()).or_default();
        e.existing += counts.existing;
        e.mined += counts.mined;
    }

    pub fn overall(&self) -> PairCounts {
        self.pairs.values().fold(PairCounts::default(), |acc, c| PairCounts {
            existing: acc.existing + c.existing,
            mined: acc.mined + c.mined,
        })
    }

    /// Rows of `pair, existing, mined, total, factor`, then the overall row.
    pub fn rows(&self) -> Vec<[String; 5]> {
        let row = |name: &str, c: &PairCounts| {
            [
                name.into(),
                format!("{}", c.existing),
                format!("{}", c.mined),
                format!("{}", c.total()),
                format_factor(c.increase_factor()),
            ]
        };
        let mut out: Vec<_> = self.pairs.iter().map(|(k, c)| row(k, c)).collect();
        out.push(row("total", &self.overall()));
        out
    }
}
