//! Inverted-file index over product-quantized codes.
//!
//! Vectors are routed to the nearest of `K` coarse centroids; each inverted
//! list stores the vector's row offset and its PQ code. In residual mode the
//! code quantizes `v - centroid`, and the score of a code under a probed list
//! is `q·centroid + ADC(q, code)`.
//!
//! Quantized scores only rank candidates. Thresholds belong after exact
//! re-scoring on the full embeddings.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::{dot, dot_f32, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::kmeans::{kmeans, nearest, KMeansConfig, DEFAULT_ITERATIONS};
use crate::pq::{PqConfig, ProductQuantizer, CODEBOOK_SIZE};

/// Probe count used for 100M-row indexes.
pub const PAPER_PROBES: usize = 1024;
/// Subspaces per code.
pub const DEFAULT_SUBSPACES: usize = 64;
/// Training rows per centroid when sampling for k-means.
pub const TRAIN_ROWS_PER_CENTROID: usize = 256;

/// `max(16, round(sqrt(n)))`, the desk-scale stand-in for 100k clusters.
pub fn default_cluster_count(n: usize) -> usize {
    let root = libm::round(libm::sqrt(n as f64)) as usize;
    root.max(16)
}

/// Default probe count: the large-index setting clamped to `K`.
pub fn default_probes(k_clusters: usize) -> usize {
    PAPER_PROBES.min(k_clusters).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseQuantizer {
    dim: usize,
    centroids: Vec<f32>,
}

impl CoarseQuantizer {
    pub fn train(sample: &EmbeddingMatrix, k: usize, iterations: usize, seed: u64) -> Result<Self> {
        if sample.len() < k {
            return Err(Error::InsufficientData {
                required: k,
                available: sample.len(),
            });
        }
        let cfg = KMeansConfig { k, iterations, seed };
        let res = kmeans(sample.data(), sample.dim(), &cfg)?;
        Ok(Self {
            dim: sample.dim(),
            centroids: res.centroids,
        })
    }

    pub fn from_centroids(dim: usize, centroids: Vec<f32>) -> Result<Self> {
        if dim == 0 || centroids.is_empty() || !centroids.len().is_multiple_of(dim) {
            return Err(Error::InvalidParameter(
                "centroids must be a nonempty multiple of dim".to_string(),
            ));
        }
        Ok(Self { dim, centroids })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn centroids(&self) -> &[f32] {
        &self.centroids
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    /// Nearest centroid by Euclidean distance, ties to the lower list.
    pub fn assign(&self, v: &[f32]) -> usize {
        nearest(&self.centroids, self.dim, v).0
    }

    /// The `p` lists closest to `query`, nearest first.
    pub fn probe(&self, query: &[f32], p: usize) -> Vec<usize> {
        let mut scored: Vec<(f32, usize)> = self
            .centroids
            .chunks_exact(self.dim)
            .map(|c| crate::embedding::l2_sq(query, c))
            .enumerate()
            .map(|(i, d)| (d, i))
            .collect();
        let p = p.min(scored.len());
        let cmp = |a: &(f32, usize), b: &(f32, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if p < scored.len() {
            scored.select_nth_unstable_by(p, cmp);
            scored.truncate(p);
        }
        scored.sort_unstable_by(cmp);
        scored.into_iter().map(|(_, i)| i).collect()
    }
}

/// One inverted list: row offsets into the id table and their codes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvertedList {
    pub offsets: Vec<u64>,
    /// `offsets.len() * m` code bytes.
    pub codes: Vec<u8>,
}

impl InvertedList {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub sent_id: String,
    pub approx_score: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexParams {
    /// Coarse clusters; `None` picks `default_cluster_count(n)`.
    pub clusters: Option<usize>,
    pub subspaces: usize,
    pub residual: bool,
    pub iterations: usize,
    pub seed: u64,
    /// Cap on training rows; `None` uses 256 rows per centroid.
    pub train_sample: Option<usize>,
}

impl Default for IndexParams {
    fn default() -> Self {
        Self {
            clusters: None,
            subspaces: DEFAULT_SUBSPACES,
            residual: true,
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            train_sample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IvfPqIndex {
    coarse: CoarseQuantizer,
    pq: ProductQuantizer,
    residual: bool,
    lists: Vec<InvertedList>,
    ids: Vec<String>,
    lookup: BTreeMap<String, u64>,
}

fn subsample(matrix: &EmbeddingMatrix, max_rows: usize, seed: u64) -> EmbeddingMatrix {
    if matrix.len() <= max_rows {
        return matrix.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5a3b_1e00_0001);
    let mut rows = sample_indices(&mut rng, matrix.len(), max_rows).into_vec();
    rows.sort_unstable();
    matrix.select(&rows)
}

/// Candidate ordering: higher score first, then lower sent_id.
fn better(a: (f32, &str), b: (f32, &str)) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => a.1 < b.1,
    }
}

/// Bounded best-k collector; small `k` keeps linear insertion cheap.
struct TopK<'a> {
    k: usize,
    items: Vec<(f32, &'a str)>,
}

impl<'a> TopK<'a> {
    fn new(k: usize) -> Self {
        Self {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    fn floor(&self) -> Option<f32> {
        (self.items.len() == self.k).then(|| self.items[self.k - 1].0)
    }

    fn push(&mut self, score: f32, id: &'a str) {
        if self.items.len() == self.k && !better((score, id), self.items[self.k - 1]) {
            return;
        }
        let pos = self
            .items
            .iter()
            .position(|&it| better((score, id), it))
            .unwrap_or(self.items.len());
        self.items.insert(pos, (score, id));
        self.items.truncate(self.k);
    }

    fn into_hits(self) -> Vec<SearchHit> {
        self.items
            .into_iter()
            .map(|(s, id)| SearchHit {
                sent_id: id.to_string(),
                approx_score: s,
            })
            .collect()
    }
}

impl IvfPqIndex {
    /// Trains the coarse quantizer and PQ codebooks on (a sample of)
    /// `matrix`. The returned index is empty; call [`IvfPqIndex::add`].
    pub fn train(matrix: &EmbeddingMatrix, params: &IndexParams) -> Result<Self> {
        let dim = matrix.dim();
        if params.subspaces == 0 || !dim.is_multiple_of(params.subspaces) {
            return Err(Error::DimensionNotDivisible {
                dim,
                m: params.subspaces,
            });
        }
        let k = params
            .clusters
            .unwrap_or_else(|| default_cluster_count(matrix.len()));
        if k == 0 {
            return Err(Error::InvalidParameter("cluster count must be positive".into()));
        }
        if matrix.len() < k {
            return Err(Error::InsufficientData {
                required: k,
                available: matrix.len(),
            });
        }
        let coarse_rows = params
            .train_sample
            .unwrap_or(k * TRAIN_ROWS_PER_CENTROID)
            .max(k);
        let coarse_sample = subsample(matrix, coarse_rows, params.seed);
        let coarse =
            CoarseQuantizer::train(&coarse_sample, k, params.iterations, params.seed)?;
        Self::train_with_coarse(matrix, coarse, params)
    }

    /// Trains PQ codebooks under a fixed coarse quantizer.
    pub fn train_with_coarse(
        matrix: &EmbeddingMatrix,
        coarse: CoarseQuantizer,
        params: &IndexParams,
    ) -> Result<Self> {
        let dim = matrix.dim();
        if coarse.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: coarse.dim(),
                actual: dim,
            });
        }
        let pq_rows = params
            .train_sample
            .unwrap_or(CODEBOOK_SIZE * TRAIN_ROWS_PER_CENTROID)
            .max(CODEBOOK_SIZE);
        let sample = subsample(matrix, pq_rows, params.seed.wrapping_add(1));
        let mut training = sample.data().to_vec();
        if params.residual {
            for row in training.chunks_exact_mut(dim) {
                let c = coarse.centroid(coarse.assign(row));
                for (x, y) in row.iter_mut().zip(c) {
                    *x -= y;
                }
            }
        }
        let pq_cfg = PqConfig {
            m: params.subspaces,
            iterations: params.iterations,
            seed: params.seed.wrapping_add(2),
        };
        let pq = ProductQuantizer::train(&training, dim, &pq_cfg)?;
        Self::from_parts(coarse, pq, params.residual, Vec::new(), Vec::new())
    }

    /// Reassembles an index from stored parts, validating its invariants.
    pub fn from_parts(
        coarse: CoarseQuantizer,
        pq: ProductQuantizer,
        residual: bool,
        lists: Vec<InvertedList>,
        ids: Vec<String>,
    ) -> Result<Self> {
        if coarse.dim() != pq.dim() {
            return Err(Error::DimensionMismatch {
                expected: coarse.dim(),
                actual: pq.dim(),
            });
        }
        let lists = if lists.is_empty() {
            vec![InvertedList::default(); coarse.len()]
        } else {
            lists
        };
        if lists.len() != coarse.len() {
            return Err(Error::InvalidParameter(
                "one inverted list per coarse centroid".to_string(),
            ));
        }
        let mut seen = vec![false; ids.len()];
        let mut total = 0;
        for list in &lists {
            if list.codes.len() != list.offsets.len() * pq.m() {
                return Err(Error::InvalidParameter("code block length".to_string()));
            }
            for &off in &list.offsets {
                let off = off as usize;
                if off >= ids.len() || core::mem::replace(&mut seen[off], true) {
                    return Err(Error::InvalidParameter(
                        "offsets must cover the id table exactly once".to_string(),
                    ));
                }
            }
            total += list.len();
        }
        if total != ids.len() {
            return Err(Error::InvalidParameter(
                "offsets must cover the id table exactly once".to_string(),
            ));
        }
        let mut lookup = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            if lookup.insert(id.clone(), i as u64).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            coarse,
            pq,
            residual,
            lists,
            ids,
            lookup,
        })
    }

    fn encode_row(&self, row: &[f32]) -> (usize, Vec<u8>) {
        let list = self.coarse.assign(row);
        let code = if self.residual {
            let residual: Vec<f32> = row
                .iter()
                .zip(self.coarse.centroid(list))
                .map(|(x, c)| x - c)
                .collect();
            self.pq.encode(&residual)
        } else {
            self.pq.encode(row)
        };
        (list, code)
    }

    /// Adds every row of `matrix`. Rejects the whole batch on a duplicate id.
    pub fn add(&mut self, matrix: &EmbeddingMatrix) -> Result<()> {
        if matrix.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: matrix.dim(),
            });
        }
        for id in matrix.ids() {
            if self.lookup.contains_key(id) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        #[cfg(feature = "parallel")]
        let encoded: Vec<(usize, Vec<u8>)> = {
            use rayon::prelude::*;
            matrix
                .data()
                .par_chunks_exact(matrix.dim())
                .map(|row| self.encode_row(row))
                .collect()
        };
        #[cfg(not(feature = "parallel"))]
        let encoded: Vec<(usize, Vec<u8>)> = matrix
            .data()
            .chunks_exact(matrix.dim())
            .map(|row| self.encode_row(row))
            .collect();
        for (id, (list, code)) in matrix.ids().iter().zip(encoded) {
            let offset = self.ids.len() as u64;
            self.ids.push(id.clone());
            self.lookup.insert(id.clone(), offset);
            let l = &mut self.lists[list];
            l.offsets.push(offset);
            l.codes.extend_from_slice(&code);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.coarse.dim()
    }

    pub fn clusters(&self) -> usize {
        self.coarse.len()
    }

    pub fn subspaces(&self) -> usize {
        self.pq.m()
    }

    pub fn residual(&self) -> bool {
        self.residual
    }

    pub fn coarse(&self) -> &CoarseQuantizer {
        &self.coarse
    }

    pub fn pq(&self) -> &ProductQuantizer {
        &self.pq
    }

    pub fn lists(&self) -> &[InvertedList] {
        &self.lists
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.lookup.contains_key(id)
    }

    /// The list `id` was routed to.
    pub fn list_of(&self, id: &str) -> Option<usize> {
        let off = *self.lookup.get(id)?;
        self.lists.iter().position(|l| l.offsets.contains(&off))
    }

    /// Top-`k` hits by ADC score over the `p` nearest lists.
    pub fn search(&self, query: &[f32], p: usize, k: usize) -> Result<Vec<SearchHit>> {
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if query.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: query.len(),
            });
        }
        if p == 0 || p > self.clusters() {
            return Err(Error::InvalidParameter(alloc::format!(
                "probe count {p} outside 1..={}",
                self.clusters()
            )));
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let m = self.pq.m();
        let table = self.pq.inner_product_table(query);
        let mut top = TopK::new(k);
        for list_id in self.coarse.probe(query, p) {
            let list = &self.lists[list_id];
            let base = if self.residual {
                dot_f32(query, self.coarse.centroid(list_id))
            } else {
                0.0
            };
            for (off, code) in list.offsets.iter().zip(list.codes.chunks_exact(m)) {
                let score = base + ProductQuantizer::adc_score(&table, code);
                if let Some(floor) = top.floor() {
                    if score < floor {
                        continue;
                    }
                }
                top.push(score, &self.ids[*off as usize]);
            }
        }
        Ok(top.into_hits())
    }
}

/// Exhaustive inner-product search; the ground truth for recall.
pub fn exact_search(matrix: &EmbeddingMatrix, query: &[f32], k: usize) -> Result<Vec<SearchHit>> {
    if matrix.is_empty() {
        return Err(Error::EmptyIndex);
    }
    if query.len() != matrix.dim() {
        return Err(Error::DimensionMismatch {
            expected: matrix.dim(),
            actual: query.len(),
        });
    }
    let mut scored: Vec<(f64, &str)> = matrix
        .rows()
        .map(|(id, row)| (dot(query, row), id))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(s, id)| SearchHit {
            sent_id: id.to_string(),
            approx_score: s as f32,
        })
        .collect())
}
