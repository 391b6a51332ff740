//! Dense unit-norm sentence embeddings and the exact alignment score.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Default encoder width.
pub const DEFAULT_DIM: usize = 768;

/// Rows whose norm deviates from 1 by more than this are renormalized on load.
pub const NORM_TOLERANCE: f64 = 1e-4;

/// A unit-norm embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f32>);

impl EmbeddingVector {
    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

impl AsRef<[f32]> for EmbeddingVector {
    fn as_ref(&self) -> &[f32] {
        &self.0
    }
}

/// Cosine similarity of two unit embeddings (the alignment score).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct LasScore(pub f64);

impl LasScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn l2_norm(v: &[f32]) -> f64 {
    libm::sqrt(v.iter().map(|&x| f64::from(x) * f64::from(x)).sum())
}

pub fn normalize(v: &[f32]) -> Result<EmbeddingVector> {
    let norm = l2_norm(v);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(EmbeddingVector(
        v.iter().map(|&x| (f64::from(x) / norm) as f32).collect(),
    ))
}

/// Inner product accumulated in f64.
pub fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(&a, &b)| f64::from(a) * f64::from(b))
        .sum()
}

/// Inner product accumulated in f32, for hot loops.
#[inline]
pub fn dot_f32(u: &[f32], v: &[f32]) -> f32 {
    let mut acc = [0f32; 8];
    let chunks = u.len() / 8 * 8;
    for (a, b) in u[..chunks].chunks_exact(8).zip(v[..chunks].chunks_exact(8)) {
        for i in 0..8 {
            acc[i] += a[i] * b[i];
        }
    }
    let mut sum: f32 = acc.iter().sum();
    for (a, b) in u[chunks..].iter().zip(&v[chunks..]) {
        sum += a * b;
    }
    sum
}

/// Squared Euclidean distance, for hot loops.
#[inline]
pub fn l2_sq(u: &[f32], v: &[f32]) -> f32 {
    let mut acc = [0f32; 8];
    let chunks = u.len() / 8 * 8;
    for (a, b) in u[..chunks].chunks_exact(8).zip(v[..chunks].chunks_exact(8)) {
        for i in 0..8 {
            let d = a[i] - b[i];
            acc[i] += d * d;
        }
    }
    let mut sum: f32 = acc.iter().sum();
    for (a, b) in u[chunks..].iter().zip(&v[chunks..]) {
        let d = a - b;
        sum += d * d;
    }
    sum
}

/// Exact alignment score between two normalized embeddings.
pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<LasScore> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    Ok(LasScore(dot(u, v)))
}

/// Row-major embeddings keyed by sentence id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    data: Vec<f32>,
    dim: usize,
    lookup: BTreeMap<String, usize>,
}

impl EmbeddingMatrix {
    /// Builds a matrix without touching the values.
    pub fn new(ids: Vec<String>, data: Vec<f32>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: ids.len() * dim,
                actual: data.len(),
            });
        }
        let mut lookup = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            if lookup.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            ids,
            data,
            dim,
            lookup,
        })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            ids: Vec::new(),
            data: Vec::new(),
            dim,
            lookup: BTreeMap::new(),
        }
    }

    /// Builds a matrix and normalizes every row.
    pub fn from_raw_rows(ids: Vec<String>, data: Vec<f32>, dim: usize) -> Result<Self> {
        let mut m = Self::new(ids, data, dim)?;
        m.normalize_rows(0.0)?;
        Ok(m)
    }

    /// Renormalizes rows whose norm is off by more than `tolerance`;
    /// returns how many rows were touched.
    pub fn normalize_rows(&mut self, tolerance: f64) -> Result<usize> {
        let mut fixed = 0;
        for row in self.data.chunks_exact_mut(self.dim) {
            let norm = l2_norm(row);
            if norm == 0.0 || !norm.is_finite() {
                return Err(Error::ZeroVector);
            }
            if (norm - 1.0).abs() > tolerance {
                for x in row.iter_mut() {
                    *x = (f64::from(*x) / norm) as f32;
                }
                fixed += 1;
            }
        }
        Ok(fixed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks_exact(self.dim))
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.position(id).map(|i| self.row(i))
    }

    /// Copies the given rows into a new matrix.
    pub fn select(&self, rows: &[usize]) -> Self {
        let ids = rows.iter().map(|&r| self.ids[r].clone()).collect();
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Self::new(ids, data, self.dim).expect("rows are distinct")
    }

    /// Row-wise concatenation; ids must stay unique.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        let mut ids = self.ids.clone();
        ids.extend(other.ids.iter().cloned());
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::new(ids, data, self.dim)
    }

    pub fn into_parts(self) -> (Vec<String>, Vec<f32>, usize) {
        (self.ids, self.data, self.dim)
    }
}
