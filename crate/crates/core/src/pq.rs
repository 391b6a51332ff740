//! Product quantization with 8-bit codes.
//!
//! A `dim`-wide vector is split into `m` contiguous subvectors; each is
//! replaced by the index of its nearest centroid in a 256-entry codebook.
//! Inner products against a query are estimated from per-subspace lookup
//! tables (asymmetric distance computation).

use alloc::vec::Vec;

use crate::embedding::dot_f32;
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, nearest, KMeansConfig, DEFAULT_ITERATIONS};

/// Centroids per subspace codebook (one byte per code).
pub const CODEBOOK_SIZE: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductQuantizer {
    dim: usize,
    m: usize,
    /// `m * 256 * sub_dim`, codebook-major.
    codebooks: Vec<f32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PqConfig {
    pub m: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl PqConfig {
    pub fn new(m: usize, seed: u64) -> Self {
        Self {
            m,
            iterations: DEFAULT_ITERATIONS,
            seed,
        }
    }
}

fn check_divisible(dim: usize, m: usize) -> Result<()> {
    if m == 0 || !dim.is_multiple_of(m) {
        return Err(Error::DimensionNotDivisible { dim, m });
    }
    Ok(())
}

impl ProductQuantizer {
    /// Trains one 256-centroid k-means per subspace over `sample` rows.
    pub fn train(sample: &[f32], dim: usize, cfg: &PqConfig) -> Result<Self> {
        check_divisible(dim, cfg.m)?;
        if !sample.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: sample.len() % dim,
            });
        }
        let n = sample.len() / dim;
        if n < CODEBOOK_SIZE {
            return Err(Error::InsufficientData {
                required: CODEBOOK_SIZE,
                available: n,
            });
        }
        let sub_dim = dim / cfg.m;
        let mut codebooks = Vec::with_capacity(cfg.m * CODEBOOK_SIZE * sub_dim);
        let mut sub = Vec::with_capacity(n * sub_dim);
        for j in 0..cfg.m {
            sub.clear();
            for row in sample.chunks_exact(dim) {
                sub.extend_from_slice(&row[j * sub_dim..(j + 1) * sub_dim]);
            }
            let km = KMeansConfig {
                k: CODEBOOK_SIZE,
                iterations: cfg.iterations,
                seed: cfg.seed.wrapping_add(j as u64),
            };
            codebooks.extend(kmeans(&sub, sub_dim, &km)?.centroids);
        }
        Ok(Self {
            dim,
            m: cfg.m,
            codebooks,
        })
    }

    /// Rebuilds a quantizer from stored codebooks.
    pub fn from_codebooks(dim: usize, m: usize, codebooks: Vec<f32>) -> Result<Self> {
        check_divisible(dim, m)?;
        if codebooks.len() != m * CODEBOOK_SIZE * (dim / m) {
            return Err(Error::DimensionMismatch {
                expected: m * CODEBOOK_SIZE * (dim / m),
                actual: codebooks.len(),
            });
        }
        Ok(Self { dim, m, codebooks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn sub_dim(&self) -> usize {
        self.dim / self.m
    }

    pub fn codebooks(&self) -> &[f32] {
        &self.codebooks
    }

    fn codebook(&self, j: usize) -> &[f32] {
        let len = CODEBOOK_SIZE * self.sub_dim();
        &self.codebooks[j * len..(j + 1) * len]
    }

    pub fn centroid(&self, j: usize, code: u8) -> &[f32] {
        let s = self.sub_dim();
        &self.codebook(j)[code as usize * s..(code as usize + 1) * s]
    }

    /// Appends the `m` code bytes of `v` to `out`.
    pub fn encode_into(&self, v: &[f32], out: &mut Vec<u8>) {
        let s = self.sub_dim();
        for (j, chunk) in v.chunks_exact(s).enumerate() {
            out.push(nearest(self.codebook(j), s, chunk).0 as u8);
        }
    }

    pub fn encode(&self, v: &[f32]) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.m);
        self.encode_into(v, &mut out);
        out
    }

    pub fn decode(&self, code: &[u8]) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.dim);
        for (j, &c) in code.iter().enumerate() {
            out.extend_from_slice(self.centroid(j, c));
        }
        out
    }

    /// `m * 256` table of query-subvector · centroid products.
    pub fn inner_product_table(&self, query: &[f32]) -> Vec<f32> {
        let s = self.sub_dim();
        let mut table = Vec::with_capacity(self.m * CODEBOOK_SIZE);
        for (j, q) in query.chunks_exact(s).enumerate() {
            table.extend(self.codebook(j).chunks_exact(s).map(|c| dot_f32(q, c)));
        }
        table
    }

    /// Inner-product estimate of a code against a prepared table.
    #[inline]
    pub fn adc_score(table: &[f32], code: &[u8]) -> f32 {
        code.iter()
            .enumerate()
            .map(|(j, &c)| table[j * CODEBOOK_SIZE + c as usize])
            .sum()
    }

    /// Mean squared reconstruction error over `data` rows.
    pub fn quantization_error(&self, data: &[f32]) -> f64 {
        let n = data.len() / self.dim;
        if n == 0 {
            return 0.0;
        }
        let total: f64 = data
            .chunks_exact(self.dim)
            .map(|row| {
                let rec = self.decode(&self.encode(row));
                row.iter()
                    .zip(&rec)
                    .map(|(a, b)| {
                        let d = f64::from(a - b);
                        d * d
                    })
                    .sum::<f64>()
            })
            .sum();
        total / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, dim: usize, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn codebook_shapes() {
        let pq = ProductQuantizer::train(&random(300, 8, 1), 8, &PqConfig::new(4, 0)).unwrap();
        assert_eq!(pq.m(), 4);
        assert_eq!(pq.sub_dim(), 2);
        assert_eq!(pq.codebooks().len(), 4 * 256 * 2);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(
            ProductQuantizer::train(&random(300, 10, 1), 10, &PqConfig::new(4, 0)),
            Err(Error::DimensionNotDivisible { dim: 10, m: 4 })
        );
        assert_eq!(
            ProductQuantizer::train(&random(100, 8, 1), 8, &PqConfig::new(4, 0)),
            Err(Error::InsufficientData {
                required: 256,
                available: 100
            })
        );
    }

    /// Every subspace draws from at most 256 distinct values, so the
    /// codebooks can hold all of them and reconstruction is exact.
    #[test]
    fn lossless_when_subspaces_are_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (dim, m) = (8, 4);
        let palette: Vec<Vec<[f32; 2]>> = (0..m)
            .map(|_| {
                (0..200)
                    .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                    .collect()
            })
            .collect();
        let mut data = Vec::new();
        for i in 0..2000 {
            for pal in &palette {
                let pick = if i < 200 { i } else { rng.gen_range(0..200) };
                data.extend_from_slice(&pal[pick]);
            }
        }
        let pq = ProductQuantizer::train(&data, dim, &PqConfig::new(m, 1)).unwrap();
        assert_eq!(pq.quantization_error(&data), 0.0);
        for row in data.chunks_exact(dim).take(50) {
            assert_eq!(pq.decode(&pq.encode(row)), row);
        }
    }

    #[test]
    fn adc_matches_reconstruction_inner_product() {
        let data = random(500, 16, 5);
        let pq = ProductQuantizer::train(&data, 16, &PqConfig::new(4, 2)).unwrap();
        let q = &random(1, 16, 6);
        let table = pq.inner_product_table(q);
        for row in data.chunks_exact(16).take(20) {
            let code = pq.encode(row);
            let adc = f64::from(ProductQuantizer::adc_score(&table, &code));
            assert!((adc - dot(q, &pq.decode(&code))).abs() < 1e-5);
        }
    }
}
