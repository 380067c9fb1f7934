//! Commit message generation toolkit.
//!
//! The pipeline mines git repositories into curated (code modification,
//! commit message) pair corpora, trains a transformer encoder-decoder over
//! byte-level BPE tokens, and generates commit messages for staged diffs
//! with beam search. Evaluation covers corpus BLEU-4 and perplexity, plus
//! ablation harnesses for the input encoding and the initial weights.

pub mod cli;
pub mod corpus;
pub mod decode;
pub mod diff;
pub mod error;
pub mod eval;
pub mod miner;
pub mod model;
pub mod tokenizer;

pub use error::{Error, Result};
