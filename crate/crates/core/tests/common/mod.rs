//! Shared fixtures for the integration suites: a deterministic 32-example
//! toy corpus, the tiny model recipe that memorizes it, and a synthetic git
//! repository builder.
//!
//! Each test binary uses its own slice of this module.
#![allow(dead_code)]

pub mod repos;

use commitgen::corpus::CorpusEntry;
use commitgen::diff::Language;
use commitgen::model::{encode_corpus, EncodedExample, InputMode, ModelConfig, TrainConfig};
use commitgen::tokenizer::{train_bpe, Vocabulary, BASE_VOCAB_SIZE};

pub const TOY_VERBS: [&str; 4] = ["add", "fix", "remove", "update"];
pub const TOY_NOUNS: [&str; 8] = [
    "parser", "loader", "cache", "index", "config", "logger", "router", "worker",
];

/// 32 distinct (modification, message) pairs with short code lines.
pub fn toy_corpus() -> Vec<CorpusEntry> {
    let mut entries = Vec::with_capacity(32);
    for (vi, verb) in TOY_VERBS.iter().enumerate() {
        for (ni, noun) in TOY_NOUNS.iter().enumerate() {
            let idx = vi * TOY_NOUNS.len() + ni;
            entries.push(CorpusEntry {
                id: format!("toy{idx:02}"),
                language: Language::Python,
                added: vec![
                    format!("def {verb}_{noun}():"),
                    format!("    return {noun}.{verb}()"),
                ],
                deleted: vec![format!("# old {noun} path")],
                message: format!("{verb} {noun} handling"),
                repo: Some("toy/corpus".into()),
                all_lines: Some(vec![
                    format!(" import {noun}"),
                    format!("-# old {noun} path"),
                    format!("+def {verb}_{noun}():"),
                    format!("+    return {noun}.{verb}()"),
                ]),
            });
        }
    }
    entries
}

pub fn toy_vocab(entries: &[CorpusEntry]) -> Vocabulary {
    let mut texts: Vec<String> = Vec::new();
    for e in entries {
        texts.push(e.added.join("\n"));
        texts.push(e.deleted.join("\n"));
        texts.push(e.message.clone());
        if let Some(all) = &e.all_lines {
            texts.push(all.join("\n"));
        }
    }
    train_bpe(&texts, BASE_VOCAB_SIZE + 48).unwrap()
}

pub fn toy_model_config(vocab: &Vocabulary) -> ModelConfig {
    ModelConfig {
        encoder_layers: 1,
        decoder_layers: 1,
        hidden_dim: 48,
        heads: 4,
        ffn_dim: 128,
        max_source_len: 64,
        max_target_len: 24,
        vocab_size: vocab.size(),
        dropout: 0.0,
    }
}

pub fn toy_train_config(epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 3e-3,
        batch_size: 32,
        epochs,
        grad_clip: Some(1.0),
        seed,
        ..TrainConfig::default()
    }
}

pub fn toy_examples(
    entries: &[CorpusEntry],
    vocab: &Vocabulary,
    config: &ModelConfig,
) -> Vec<EncodedExample> {
    encode_corpus(entries, vocab, InputMode::ChangedLines, config)
}

/// Naive reference BLEU-4 kept independent of the production path: sorted
/// n-gram lists and a two-pointer clip count instead of hash maps.
pub fn naive_bleu4(hypotheses: &[Vec<String>], references: &[Vec<String>]) -> f64 {
    assert_eq!(hypotheses.len(), references.len());
    let ngrams_of = |tokens: &[String], n: usize| -> Vec<String> {
        if tokens.len() < n {
            return Vec::new();
        }
        (0..=tokens.len() - n)
            .map(|i| tokens[i..i + n].join("\u{1}"))
            .collect()
    };
    let mut hyp_len = 0usize;
    let mut ref_len = 0usize;
    let mut matches = [0usize; 4];
    let mut totals = [0usize; 4];
    for (hyp, re) in hypotheses.iter().zip(references) {
        hyp_len += hyp.len();
        ref_len += re.len();
        for n in 1..=4 {
            let mut hyp_grams = ngrams_of(hyp, n);
            let mut ref_grams = ngrams_of(re, n);
            totals[n - 1] += hyp_grams.len();
            hyp_grams.sort();
            ref_grams.sort();
            let (mut i, mut j) = (0, 0);
            while i < hyp_grams.len() && j < ref_grams.len() {
                match hyp_grams[i].cmp(&ref_grams[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        matches[n - 1] += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    if hyp_len == 0 {
        return 0.0;
    }
    let mut geo = 0.0;
    for n in 0..4 {
        let p = if totals[n] == 0 {
            1.0
        } else if matches[n] == 0 {
            1e-9 / totals[n] as f64
        } else {
            matches[n] as f64 / totals[n] as f64
        };
        geo += p.ln() / 4.0;
    }
    let bp = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    100.0 * bp * geo.exp()
}
