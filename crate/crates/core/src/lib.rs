//! lexshare: a sequence-labelling toolkit.
//!
//! The crate has three pillars:
//!
//! - exact information-theoretic statistics over tag layers (entropy,
//!   mutual information, rank correlations) in [`tagstats`];
//! - a hard-parameter-sharing multitask, multilingual neural tagger on
//!   a small reverse-mode differentiation core ([`neural`], [`tagger`]),
//!   next to a classical trigram baseline;
//! - an experiment harness ([`harness`]) that runs the overlap,
//!   transfer-curve, and held-out-pair protocols over corpora and emits
//!   machine-readable reports.
//!
//! [`corpus`] and [`embeddings`] supply the data model: annotated
//! corpora in CoNLL-U or TSV form and pre-trained (optionally
//! multilingual) word vectors. [`synth`] generates deterministic
//! fixture corpora for desk-scale experiments and tests.

pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod harness;
pub mod neural;
pub mod rng;
pub mod synth;
pub mod tagger;
pub mod tagstats;

pub use error::{Error, Result};

/// Toolkit version, recorded in reports and checkpoint manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
