//! HTTP client for an embedding provider.
//!
//! Protocol: `POST <endpoint>/embed` with `{"texts": [...]}`, answered by
//! `{"dim": d, "vectors": [[...], ...]}` in request order.

use std::thread;
use std::time::Duration;

use bitext_core::corpus::SentenceRecord;
use bitext_core::embedding::{EmbeddingMatrix, NORM_TOLERANCE};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BitextError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientConfig {
    pub endpoint: String,
    pub batch_size: usize,
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub max_backoff_ms: u64,
    pub timeout_secs: u64,
    /// Batches in flight at once.
    pub concurrency: usize,
}

impl Default for ClientConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8000".into(),
            batch_size: 64,
            max_attempts: 5,
            initial_backoff_ms: 200,
            max_backoff_ms: 10_000,
            timeout_secs: 120,
            concurrency: 1,
        }
    }
}

impl ClientConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(BitextError::config("provider batch_size must be at least 1"));
        }
        if self.max_attempts == 0 {
            return Err(BitextError::config("provider max_attempts must be at least 1"));
        }
        if self.concurrency == 0 {
            return Err(BitextError::config("provider concurrency must be at least 1"));
        }
        if !self.endpoint.starts_with("http://") && !self.endpoint.starts_with("https://") {
            return Err(BitextError::config(format!(
                "provider endpoint {:?} is not an http(s) URL",
                self.endpoint
            )));
        }
        Ok(())
    }

    fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/embed") {
            base.to_string()
        } else {
            format!("{base}/embed")
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64 << attempt.saturating_sub(1).min(20);
        Duration::from_millis(self.initial_backoff_ms.saturating_mul(factor).min(self.max_backoff_ms))
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    dim: usize,
    vectors: Vec<Vec<f32>>,
}

enum Failure {
    Transient(String),
    Fatal(BitextError),
}

pub struct EmbedClient {
    cfg: ClientConfig,
    agent: ureq::Agent,
}

impl EmbedClient {
    pub fn new(cfg: ClientConfig) -> Result<Self> {
        cfg.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self { cfg, agent })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.cfg
    }

    fn attempt(&self, texts: &[String]) -> std::result::Result<EmbedResponse, Failure> {
        let mut resp = self
            .agent
            .post(&self.cfg.url())
            .send_json(EmbedRequest { texts })
            .map_err(|e| Failure::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 408 || status == 429 || status >= 500 {
            return Err(Failure::Transient(format!("HTTP {status}")));
        }
        if status != 200 {
            return Err(Failure::Fatal(BitextError::Protocol(format!(
                "HTTP {status} from {}",
                self.cfg.url()
            ))));
        }
        resp.body_mut()
            .read_json::<EmbedResponse>()
            .map_err(|e| Failure::Fatal(BitextError::Protocol(format!("bad response body: {e}"))))
    }

    /// One batch with retries and exponential backoff.
    fn embed_batch(&self, texts: &[String]) -> Result<(usize, Vec<Vec<f32>>)> {
        let mut last = String::new();
        for attempt in 1..=self.cfg.max_attempts {
            match self.attempt(texts) {
                Ok(r) => {
                    if r.vectors.len() != texts.len() {
                        return Err(BitextError::PartialResponse {
                            expected: texts.len(),
                            got: r.vectors.len(),
                        });
                    }
                    if let Some(v) = r.vectors.iter().find(|v| v.len() != r.dim) {
                        return Err(BitextError::Protocol(format!(
                            "vector of length {} in a response declaring dim {}",
                            v.len(),
                            r.dim
                        )));
                    }
                    return Ok((r.dim, r.vectors));
                }
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(msg)) => {
                    log::warn!("embed attempt {attempt}/{} failed: {msg}", self.cfg.max_attempts);
                    last = msg;
                    if attempt < self.cfg.max_attempts {
                        thread::sleep(self.cfg.backoff(attempt));
                    }
                }
            }
        }
        Err(BitextError::ProviderUnavailable {
            attempts: self.cfg.max_attempts,
            last,
        })
    }

    /// Raw vectors for `texts`, in order. Empty input makes no request.
    pub fn embed_texts(&self, texts: &[String]) -> Result<(usize, Vec<Vec<f32>>)> {
        if texts.is_empty() {
            return Ok((0, Vec::new()));
        }
        let batches: Vec<&[String]> = texts.chunks(self.cfg.batch_size).collect();
        let results: Vec<Result<(usize, Vec<Vec<f32>>)>> = if self.cfg.concurrency > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.cfg.concurrency)
                .build()
                .map_err(|e| BitextError::config(e.to_string()))?;
            pool.install(|| batches.par_iter().map(|b| self.embed_batch(b)).collect())
        } else {
            batches.iter().map(|b| self.embed_batch(b)).collect()
        };
        let mut dim = None;
        let mut out = Vec::with_capacity(texts.len());
        for r in results {
            let (d, vs) = r?;
            if *dim.get_or_insert(d) != d {
                return Err(BitextError::Protocol(format!("dimension changed between batches: {} then {d}", dim.unwrap_or(0))));
            }
            out.extend(vs);
        }
        Ok((dim.unwrap_or(0), out))
    }

    /// Embeds sentence records into a matrix keyed by `sent_id`; returns the
    /// number of rows that had to be renormalized.
    pub fn fetch_embeddings(&self, records: &[SentenceRecord], dim_hint: usize) -> Result<(EmbeddingMatrix, usize)> {
        let texts: Vec<String> = records.iter().map(|r| r.text.clone()).collect();
        let (dim, vectors) = self.embed_texts(&texts)?;
        if vectors.is_empty() {
            return Ok((EmbeddingMatrix::empty(dim_hint.max(1)), 0));
        }
        let ids = records.iter().map(|r| r.sent_id.clone()).collect();
        let mut m = EmbeddingMatrix::new(ids, vectors.concat(), dim)?;
        let fixed = m.normalize_rows(NORM_TOLERANCE)?;
        Ok((m, fixed))
    }
}
