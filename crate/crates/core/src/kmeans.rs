//! Lloyd's k-means with k-means++ seeding.
//!
//! Used for both the coarse quantizer and the per-subspace PQ codebooks.
//! Empty clusters are re-seeded with the point of the largest cluster that
//! lies farthest from its centroid.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::l2_sq;
use crate::error::{Error, Result};

pub const DEFAULT_ITERATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub k: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            iterations: DEFAULT_ITERATIONS,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// `k * dim` row-major centroids.
    pub centroids: Vec<f32>,
    pub assignments: Vec<u32>,
    /// Sum of squared distances after each assignment step.
    pub objective: Vec<f64>,
}

/// Index of the nearest row in `centroids`; ties go to the lower index.
#[inline]
pub fn nearest(centroids: &[f32], dim: usize, x: &[f32]) -> (usize, f32) {
    let mut best = (0, f32::INFINITY);
    for (i, c) in centroids.chunks_exact(dim).enumerate() {
        let d = l2_sq(x, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn assign(data: &[f32], dim: usize, centroids: &[f32]) -> (Vec<u32>, Vec<f32>) {
    #[cfg(feature = "parallel")]
    let pairs: Vec<(u32, f32)> = {
        use rayon::prelude::*;
        data.par_chunks_exact(dim)
            .map(|x| {
                let (i, d) = nearest(centroids, dim, x);
                (i as u32, d)
            })
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let pairs: Vec<(u32, f32)> = data
        .chunks_exact(dim)
        .map(|x| {
            let (i, d) = nearest(centroids, dim, x);
            (i as u32, d)
        })
        .collect();
    pairs.into_iter().unzip()
}

fn plus_plus_init(data: &[f32], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let n = data.len() / dim;
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centroids = Vec::with_capacity(k * dim);
    centroids.extend_from_slice(row(first));
    let mut dist: Vec<f64> = (0..n).map(|i| f64::from(l2_sq(row(i), row(first)))).collect();
    while centroids.len() < k * dim {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive mass")
        } else {
            // Every point coincides with a centroid: take any unused row.
            let unused = chosen.iter().filter(|c| !**c).count();
            let nth = rng.gen_range(0..unused.max(1));
            chosen
                .iter()
                .enumerate()
                .filter(|(_, c)| !**c)
                .nth(nth)
                .map_or(0, |(i, _)| i)
        };
        chosen[pick] = true;
        let c = row(pick).to_vec();
        for (i, d) in dist.iter_mut().enumerate() {
            let nd = f64::from(l2_sq(row(i), &c));
            if nd < *d {
                *d = nd;
            }
        }
        centroids.extend_from_slice(&c);
    }
    centroids
}

/// Clusters `n = data.len() / dim` rows into `cfg.k` groups.
pub fn kmeans(data: &[f32], dim: usize, cfg: &KMeansConfig) -> Result<KMeansResult> {
    if dim == 0 || !data.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: data.len(),
        });
    }
    if cfg.k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let n = data.len() / dim;
    if n < cfg.k {
        return Err(Error::InsufficientData {
            required: cfg.k,
            available: n,
        });
    }
    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = plus_plus_init(data, dim, k, &mut rng);
    let mut objective = Vec::with_capacity(cfg.iterations + 1);
    let (mut assignments, mut dists) = assign(data, dim, &centroids);
    objective.push(dists.iter().map(|&d| f64::from(d)).sum());

    for _ in 0..cfg.iterations {
        let mut sums = vec![0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (x, &a) in data.chunks_exact(dim).zip(&assignments) {
            let a = a as usize;
            counts[a] += 1;
            for (s, &v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(x) {
                *s += f64::from(v);
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centroids[c * dim..(c + 1) * dim]
                    .iter_mut()
                    .zip(&sums[c * dim..(c + 1) * dim])
                {
                    *dst = (s * inv) as f32;
                }
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let largest = (0..k).max_by_key(|&i| (counts[i], core::cmp::Reverse(i))).unwrap();
            let far = (0..n)
                .filter(|&i| assignments[i] as usize == largest)
                .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)));
            if let Some(p) = far {
                centroids[c * dim..(c + 1) * dim].copy_from_slice(&data[p * dim..(p + 1) * dim]);
                assignments[p] = c as u32;
                dists[p] = 0.0;
                counts[largest] -= 1;
                counts[c] = 1;
            }
        }
        let (a, d) = assign(data, dim, &centroids);
        assignments = a;
        dists = d;
        objective.push(dists.iter().map(|&d| f64::from(d)).sum());
    }
    Ok(KMeansResult {
        centroids,
        assignments,
        objective,
    })
}
