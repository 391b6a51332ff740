//! Std companion to `bitext-core`: file formats, the embedding-provider
//! client, a fake encoder for tests and the staged mining pipeline behind
//! the `bitext` command.

pub mod cli;
pub mod client;
pub mod config;
pub mod error;
pub mod fake;
pub mod formats;
pub mod pipeline;

pub use bitext_core;
pub use error::{BitextError, Result};
