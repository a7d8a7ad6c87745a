//! Corpus annotation, mask planning and evaluation for cross-modal masked
//! language modeling.
//!
//! The crate turns caption corpora into deterministic mask plans under a
//! family of word-level masking strategies, and scores the prediction logs
//! that external models produce for those plans:
//!
//! - [`corpus`] loads captions, scene graphs and the lexical resources.
//! - [`tokenize`] runs WordPiece with a word to piece span map.
//! - [`annotate`] tags words with semantic classes, stop-word status,
//!   concreteness and scene-graph grounding.
//! - [`mask`] builds seeded [`mask::MaskPlan`]s with whole-word masking.
//! - [`stats`] reports zero-mask rates and masked class shares.
//! - [`lossgap`] computes LossGap, Accuracy@k and per-class hierarchies.
//! - [`promptprobe`] scores cloze-prompt object detection.
//! - [`cli`] wires everything into the `vlmask` executable.

pub mod annotate;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod lossgap;
pub mod mask;
pub mod promptprobe;
pub mod stats;
pub mod tokenize;

pub use error::{Error, Result};
