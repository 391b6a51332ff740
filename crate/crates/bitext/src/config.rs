//! Declarative run configuration (TOML).
//!
//! Relative paths are resolved against the directory holding the config
//! file. Embedding files are checked by the stage that reads them, so a run
//! can be configured before its embeddings exist.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use bitext_core::ivf::{IndexParams, DEFAULT_SUBSPACES};
use bitext_core::kmeans::DEFAULT_ITERATIONS;
use bitext_core::lang::{LanguageCode, LanguageSet, DEFAULT_LANGUAGES};
use bitext_core::mine::{MiningMode, ThresholdPolicy};
use bitext_core::refine::FilterConfig;
use serde::{Deserialize, Serialize};

use crate::client::ClientConfig;
use crate::error::{BitextError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexConfig {
    /// Coarse clusters; `max(16, round(sqrt(n)))` when unset.
    pub clusters: Option<usize>,
    pub subspaces: usize,
    /// Lists probed per query; `min(1024, K)` when unset.
    pub probes: Option<usize>,
    /// Hits re-scored per query.
    pub top_k: usize,
    pub residual: bool,
    pub iterations: usize,
    /// Cap on training rows for both quantizers.
    pub train_sample: Option<usize>,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            clusters: None,
            subspaces: DEFAULT_SUBSPACES,
            probes: None,
            top_k: 1,
            residual: true,
            iterations: DEFAULT_ITERATIONS,
            train_sample: None,
        }
    }
}

impl IndexConfig {
    pub fn params(&self, seed: u64) -> IndexParams {
        IndexParams {
            clusters: self.clusters,
            subspaces: self.subspaces,
            residual: self.residual,
            iterations: self.iterations,
            seed,
            train_sample: self.train_sample,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subspaces == 0 {
            return Err(BitextError::config("index.subspaces must be at least 1"));
        }
        if self.top_k == 0 {
            return Err(BitextError::config("index.top_k must be at least 1"));
        }
        if self.clusters == Some(0) || self.probes == Some(0) {
            return Err(BitextError::config("index.clusters and index.probes must be positive"));
        }
        if let (Some(k), Some(p)) = (self.clusters, self.probes) {
            if p > k {
                return Err(BitextError::config(format!("index.probes {p} exceeds index.clusters {k}")));
            }
        }
        if self.iterations == 0 {
            return Err(BitextError::config("index.iterations must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub name: String,
    pub mode: MiningMode,
    pub src_lang: String,
    pub tgt_lang: String,
    pub src_docs: PathBuf,
    pub tgt_docs: PathBuf,
    /// Precomputed SEMB files; fetched from the provider when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub src_embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tgt_embeddings: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub enabled: bool,
    pub n_per_band: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            n_per_band: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub languages: Vec<String>,
    pub out_dir: PathBuf,
    /// Expected embedding dimension.
    pub dim: usize,
    /// Directory of `<lang>.txt` non-breaking prefix lists replacing the
    /// bundled ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prefixes_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heldout_dir: Option<PathBuf>,
    pub thresholds: ThresholdPolicy,
    pub index: IndexConfig,
    pub filters: FilterConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provider: Option<ClientConfig>,
    pub sample: SampleConfig,
    /// Language pairs `[a, b]` to join through shared English.
    pub pivots: Vec<[String; 2]>,
    pub corpora: Vec<CorpusConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 0,
            languages: DEFAULT_LANGUAGES.iter().map(|s| s.to_string()).collect(),
            out_dir: PathBuf::from("out"),
            dim: bitext_core::embedding::DEFAULT_DIM,
            prefixes_dir: None,
            heldout_dir: None,
            thresholds: ThresholdPolicy::default(),
            index: IndexConfig::default(),
            filters: FilterConfig::default(),
            provider: None,
            sample: SampleConfig::default(),
            pivots: Vec::new(),
            corpora: Vec::new(),
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BitextError::config(e.to_string()))
    }

    /// Parses a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BitextError::config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        resolve(base, &mut self.out_dir);
        for p in [&mut self.prefixes_dir, &mut self.heldout_dir].into_iter().flatten() {
            resolve(base, p);
        }
        for c in &mut self.corpora {
            resolve(base, &mut c.src_docs);
            resolve(base, &mut c.tgt_docs);
            for p in [&mut c.src_embeddings, &mut c.tgt_embeddings].into_iter().flatten() {
                resolve(base, p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn language_set(&self) -> Result<LanguageSet> {
        LanguageSet::new(self.languages.iter().map(String::as_str))
            .map_err(|e| BitextError::config(e.to_string()))
    }

    pub fn corpus(&self, name: &str) -> Option<&CorpusConfig> {
        self.corpora.iter().find(|c| c.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        let langs = self.language_set()?;
        let lang = |tag: &str| -> Result<LanguageCode> {
            langs.resolve(tag).map_err(|e| BitextError::config(e.to_string()))
        };
        self.thresholds
            .validate()
            .map_err(|e| BitextError::config(e.to_string()))?;
        self.index.validate()?;
        self.filters
            .validate()
            .map_err(|e| BitextError::config(e.to_string()))?;
        if self.dim == 0 {
            return Err(BitextError::config("dim must be positive"));
        }
        if let Some(p) = &self.provider {
            p.validate()?;
        }
        if self.sample.enabled && self.sample.n_per_band == 0 {
            return Err(BitextError::config("sample.n_per_band must be at least 1"));
        }
        for dir in [&self.prefixes_dir, &self.heldout_dir].into_iter().flatten() {
            if !dir.is_dir() {
                return Err(BitextError::config(format!("{} is not a directory", dir.display())));
            }
        }
        let mut names = BTreeSet::new();
        for c in &self.corpora {
            let ok_name = !c.name.is_empty()
                && c.name.chars().all(|ch| ch.is_ascii_alphanumeric() || "-_.".contains(ch));
            if !ok_name {
                return Err(BitextError::config(format!(
                    "corpus name {:?} must be nonempty ASCII letters, digits, '-', '_' or '.'",
                    c.name
                )));
            }
            if !names.insert(&c.name) {
                return Err(BitextError::config(format!("duplicate corpus name {:?}", c.name)));
            }
            let (s, t) = (lang(&c.src_lang)?, lang(&c.tgt_lang)?);
            if s == t {
                return Err(BitextError::config(format!("corpus {}: both sides are {}", c.name, s.as_str())));
            }
            for p in [&c.src_docs, &c.tgt_docs] {
                if !p.is_file() {
                    return Err(BitextError::config(format!(
                        "corpus {}: document file {} does not exist",
                        c.name,
                        p.display()
                    )));
                }
            }
            let needs_provider = c.src_embeddings.is_none() || c.tgt_embeddings.is_none();
            if needs_provider && self.provider.is_none() {
                return Err(BitextError::config(format!(
                    "corpus {}: no embedding files and no [provider] configured",
                    c.name
                )));
            }
        }
        for [a, b] in &self.pivots {
            let (a, b) = (lang(a)?, lang(b)?);
            if a.is_english() || b.is_english() || a == b {
                return Err(BitextError::config(format!(
                    "pivot pair {}-{} must join two distinct non-English languages",
                    a.as_str(),
                    b.as_str()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = RunConfig::from_toml(
            r#"
            seed = 7
            [thresholds]
            monolingual = 0.85
            [index]
            subspaces = 16
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.thresholds.monolingual, 0.85);
        assert_eq!(cfg.thresholds.comparable, 0.75);
        assert_eq!(cfg.index.subspaces, 16);
        assert_eq!(cfg.index.top_k, 1);
        assert_eq!(cfg.filters.min_en_words, 4);
        assert!(cfg.validate().is_ok());
        let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(RunConfig::from_toml("bogus = 1").is_err());
        let bad = RunConfig::from_toml("[thresholds]\ncomparable = 1.5").unwrap();
        assert!(matches!(bad.validate(), Err(BitextError::Config(_))));
        let bad = RunConfig::from_toml("[index]\nclusters = 4\nprobes = 8").unwrap();
        assert!(bad.validate().is_err());
        let bad = RunConfig::from_toml("pivots = [[\"hi\", \"en\"]]").unwrap();
        assert!(bad.validate().is_err());
    }
}
