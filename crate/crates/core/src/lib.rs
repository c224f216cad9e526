//! Gendered discourse discovery and measurement.
//!
//! The crate has two halves. The first discovers gendered discourse word
//! lists from a transcript corpus: [`corpus`] ingests and filters episodes,
//! [`topics`] fits an LDA topic model, and [`correlate`] tests every pair of
//! per-episode features for a Bonferroni-significant Pearson correlation.
//! The second half, [`dweat`], measures how text-embedding models react when
//! those discourse words are swapped between the feminine and masculine
//! lists, using providers from [`embed`].
//!
//! [`pipeline`] wires the stages together behind the `gendisc` binary.

pub mod correlate;
pub mod corpus;
pub mod dweat;
pub mod embed;
pub mod error;
pub mod pipeline;
pub mod stats;
pub mod synth;
pub mod text;
pub mod topics;

pub use error::{Error, Result};
