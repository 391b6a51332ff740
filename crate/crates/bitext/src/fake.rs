//! Deterministic stand-in for a sentence encoder.
//!
//! The direction of a string `s` under seed `seed` is defined as follows.
//! Let `h = SHA-256(seed as u64 LE ‖ UTF-8 s)`. Block `i` is
//! `SHA-256(h ‖ i as u32 LE)`, read as eight u32 LE words; concatenating
//! blocks gives words `w0, w1, …`, each mapped to `u = (w + 0.5) / 2^32`.
//! Consecutive pairs `(u1, u2)` give two normals via Box-Muller,
//! `sqrt(-2 ln u1)·cos(2π u2)` and `sqrt(-2 ln u1)·sin(2π u2)`; the first
//! `dim` normals, scaled to unit length in f64 and rounded to f32, are the
//! vector.
//!
//! Texts that share a paraphrase key embed to
//! `normalize(dir(key) + noise·dir(text))`, which puts planted translations
//! at cosine about `1 / (1 + noise²)` from each other.

use bitext_core::embedding::EmbeddingMatrix;
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FakeEncoder {
    pub dim: usize,
    pub seed: u64,
}

impl FakeEncoder {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }

    fn normals(&self, s: &str) -> Vec<f64> {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(s.as_bytes());
        let root = h.finalize();
        let mut out = Vec::with_capacity(self.dim + 1);
        let mut block = 0u32;
        while out.len() < self.dim {
            let mut b = Sha256::new();
            b.update(root);
            b.update(block.to_le_bytes());
            let words = b.finalize();
            let u: Vec<f64> = words
                .chunks_exact(4)
                .map(|w| (f64::from(u32::from_le_bytes(w.try_into().expect("4 bytes"))) + 0.5) / 4_294_967_296.0)
                .collect();
            for pair in u.chunks_exact(2) {
                let r = (-2.0 * pair[0].ln()).sqrt();
                let t = std::f64::consts::TAU * pair[1];
                out.push(r * t.cos());
                out.push(r * t.sin());
            }
            block += 1;
        }
        out.truncate(self.dim);
        out
    }

    fn unit(v: &[f64]) -> Vec<f32> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| (x / n) as f32).collect()
    }

    /// The pseudo-random unit direction of `s`.
    pub fn embed(&self, s: &str) -> Vec<f32> {
        Self::unit(&self.normals(s))
    }

    /// Embedding of `text`, pulled onto the direction of `key` when given.
    pub fn embed_keyed(&self, text: &str, key: Option<&str>, noise: f64) -> Vec<f32> {
        let Some(key) = key else {
            return self.embed(text);
        };
        let base = Self::unit(&self.normals(key));
        let jitter = Self::unit(&self.normals(text));
        let mixed: Vec<f64> = base
            .iter()
            .zip(&jitter)
            .map(|(b, j)| f64::from(*b) + noise * f64::from(*j))
            .collect();
        Self::unit(&mixed)
    }

    pub fn embed_all(&self, texts: &[String]) -> Vec<Vec<f32>> {
        texts.iter().map(|t| self.embed(t)).collect()
    }

    pub fn matrix(&self, ids: Vec<String>, texts: &[String]) -> Result<EmbeddingMatrix> {
        let data: Vec<f32> = texts.iter().flat_map(|t| self.embed(t)).collect();
        Ok(EmbeddingMatrix::new(ids, data, self.dim)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bitext_core::embedding::dot;

    #[test]
    fn deterministic_unit_vectors() {
        let e = FakeEncoder::new(64, 3);
        let a = e.embed("hello");
        assert_eq!(a, e.embed("hello"));
        assert_ne!(a, e.embed("hello!"));
        assert_ne!(a, FakeEncoder::new(64, 4).embed("hello"));
        assert!((dot(&a, &a) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn shared_keys_are_close() {
        let e = FakeEncoder::new(256, 0);
        let a = e.embed_keyed("the budget passed", Some("k1"), 0.25);
        let b = e.embed_keyed("बजट पारित हुआ", Some("k1"), 0.25);
        let c = e.embed_keyed("unrelated", Some("k2"), 0.25);
        assert!(dot(&a, &b) > 0.9);
        assert!(dot(&a, &c) < 0.5);
    }
}
