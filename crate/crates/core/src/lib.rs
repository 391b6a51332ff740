//! Algorithms for mining parallel sentences from multilingual embeddings.
//!
//! Everything here works on in-memory data and needs only `alloc`; file
//! formats, the embedding-provider client and the command-line pipeline live
//! in the companion `bitext` crate. Enable the `parallel` feature to spread
//! k-means assignment, index encoding and batched mining over rayon.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
extern crate alloc;

pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod ivf;
pub mod kmeans;
pub mod lang;
pub mod langid;
pub mod mine;
pub mod pq;
pub mod refine;
pub mod segment;
pub mod stats;

pub use error::{Error, Result};
