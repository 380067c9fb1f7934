//! Beam-search and greedy decoding.
//!
//! Each step expands every live hypothesis by the whole vocabulary and keeps
//! the top-K expansions by cumulative log-probability (ties break toward the
//! lexicographically smaller token sequence, so decoding is deterministic).
//! Selected hypotheses that emit the end token or hit the length cap freeze
//! into a finished pool and compete in the final ranking.

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusEntry;
use crate::error::{Error, Result};
use crate::model::{
    build_input, EncodedExample, InferenceSession, InputMode, ModelConfig, ModelParameters,
};
use crate::tokenizer::{Vocabulary, BOS_ID, EOS_ID};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub beam_size: usize,
    pub max_target_len: usize,
    /// Exponent of the length normalizer applied in the final ranking;
    /// 0 disables it.
    pub length_penalty: f64,
}

impl Default for DecodeConfig {
    fn default() -> DecodeConfig {
        DecodeConfig {
            beam_size: 10,
            max_target_len: 128,
            length_penalty: 0.0,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size < 1 {
            return Err(Error::data("beam_size must be at least 1"));
        }
        if self.max_target_len < 1 {
            return Err(Error::data("max_target_len must be at least 1"));
        }
        Ok(())
    }
}

/// One decoded candidate. `ids` always starts with the start token;
/// `finished` holds exactly when the last id is the end token or the length
/// cap was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub ids: Vec<u32>,
    pub logprob: f64,
    pub finished: bool,
}

impl Hypothesis {
    /// Generated length: tokens after the start token.
    pub fn generated_len(&self) -> usize {
        self.ids.len().saturating_sub(1)
    }

    /// Ranking score with optional length normalization.
    pub fn ranking_score(&self, length_penalty: f64) -> f64 {
        if length_penalty == 0.0 {
            self.logprob
        } else {
            self.logprob / (self.generated_len().max(1) as f64).powf(length_penalty)
        }
    }
}

/// Anything that can score the next token given a target prefix. Implemented
/// by the transformer's inference session; tests substitute table-driven
/// models.
pub trait NextTokenScorer {
    fn vocab_size(&self) -> usize;
    fn next_logprobs(&self, prefix: &[u32]) -> Result<Vec<f64>>;
}

impl NextTokenScorer for InferenceSession<'_> {
    fn vocab_size(&self) -> usize {
        InferenceSession::vocab_size(self)
    }

    fn next_logprobs(&self, prefix: &[u32]) -> Result<Vec<f64>> {
        self.next_token_logprobs(prefix)
    }
}

fn compare_candidates(a: &(Vec<u32>, f64), b: &(Vec<u32>, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

/// Beam search over any next-token scorer.
pub fn beam_search_scorer<M: NextTokenScorer>(
    model: &M,
    config: &DecodeConfig,
) -> Result<Vec<Hypothesis>> {
    config.validate()?;
    let vocab = model.vocab_size();
    let cap = config.max_target_len;

    let mut live: Vec<Hypothesis> = vec![Hypothesis {
        ids: vec![BOS_ID],
        logprob: 0.0,
        finished: false,
    }];
    let mut pool: Vec<Hypothesis> = Vec::new();

    while !live.is_empty() {
        let mut candidates: Vec<(Vec<u32>, f64)> =
            Vec::with_capacity(live.len() * vocab);
        for hyp in &live {
            let logprobs = model.next_logprobs(&hyp.ids)?;
            if logprobs.len() != vocab {
                return Err(Error::Shape(format!(
                    "scorer returned {} log-probabilities for vocab {vocab}",
                    logprobs.len()
                )));
            }
            for (token, lp) in logprobs.iter().enumerate() {
                let mut ids = Vec::with_capacity(hyp.ids.len() + 1);
                ids.extend_from_slice(&hyp.ids);
                ids.push(token as u32);
                candidates.push((ids, hyp.logprob + lp));
            }
        }
        candidates.sort_by(compare_candidates);
        candidates.truncate(config.beam_size);

        let mut next_live = Vec::with_capacity(config.beam_size);
        for (ids, logprob) in candidates {
            let finished = *ids.last().unwrap() == EOS_ID || ids.len() >= cap;
            let hyp = Hypothesis {
                ids,
                logprob,
                finished,
            };
            if finished {
                pool.push(hyp);
            } else {
                next_live.push(hyp);
            }
        }
        live = next_live;
    }

    pool.sort_by(|a, b| {
        b.ranking_score(config.length_penalty)
            .total_cmp(&a.ranking_score(config.length_penalty))
            .then_with(|| a.ids.cmp(&b.ids))
    });
    pool.truncate(config.beam_size);
    Ok(pool)
}

/// Greedy argmax decoding (ties toward the lower token id).
pub fn greedy_decode_scorer<M: NextTokenScorer>(
    model: &M,
    config: &DecodeConfig,
) -> Result<Hypothesis> {
    config.validate()?;
    let mut ids = vec![BOS_ID];
    let mut logprob = 0.0;
    loop {
        let logprobs = model.next_logprobs(&ids)?;
        let (token, lp) = logprobs
            .iter()
            .enumerate()
            .reduce(|best, cur| if cur.1 > best.1 { cur } else { best })
            .expect("non-empty vocabulary");
        ids.push(token as u32);
        logprob += lp;
        if token as u32 == EOS_ID || ids.len() >= config.max_target_len {
            return Ok(Hypothesis {
                ids,
                logprob,
                finished: true,
            });
        }
    }
}

/// Beam search from a trained model and a built source example.
pub fn beam_search(
    params: &ModelParameters,
    model_config: &ModelConfig,
    source: &EncodedExample,
    config: &DecodeConfig,
) -> Result<Vec<Hypothesis>> {
    let session = InferenceSession::new(params, model_config, source)?;
    let effective = DecodeConfig {
        max_target_len: config.max_target_len.min(model_config.max_target_len),
        ..*config
    };
    beam_search_scorer(&session, &effective)
}

/// Greedy decoding from a trained model and a built source example.
pub fn greedy_decode(
    params: &ModelParameters,
    model_config: &ModelConfig,
    source: &EncodedExample,
    config: &DecodeConfig,
) -> Result<Hypothesis> {
    let session = InferenceSession::new(params, model_config, source)?;
    let effective = DecodeConfig {
        max_target_len: config.max_target_len.min(model_config.max_target_len),
        ..*config
    };
    greedy_decode_scorer(&session, &effective)
}

/// A generated commit message with its score and input-quality flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generated {
    pub message: String,
    pub score: f64,
    /// True when the source had no added or deleted lines to condition on.
    pub degenerate_input: bool,
}

/// End-to-end generation: build the source encoding, run beam search, decode
/// the top hypothesis with specials stripped.
pub fn generate_message(
    params: &ModelParameters,
    model_config: &ModelConfig,
    entry: &CorpusEntry,
    vocab: &Vocabulary,
    mode: InputMode,
    config: &DecodeConfig,
) -> Result<Generated> {
    let source = build_input(entry, vocab, mode, model_config);
    let hyps = beam_search(params, model_config, &source, config)?;
    let top = hyps
        .first()
        .ok_or_else(|| Error::data("beam search returned no hypotheses"))?;
    Ok(Generated {
        message: vocab.decode(&top.ids)?,
        score: top.logprob,
        degenerate_input: source.degenerate,
    })
}

/// Top-N generation for candidate listings.
pub fn generate_candidates(
    params: &ModelParameters,
    model_config: &ModelConfig,
    entry: &CorpusEntry,
    vocab: &Vocabulary,
    mode: InputMode,
    config: &DecodeConfig,
    count: usize,
) -> Result<Vec<Generated>> {
    let source = build_input(entry, vocab, mode, model_config);
    let hyps = beam_search(params, model_config, &source, config)?;
    hyps.iter()
        .take(count)
        .map(|h| {
            Ok(Generated {
                message: vocab.decode(&h.ids)?,
                score: h.logprob,
                degenerate_input: source.degenerate,
            })
        })
        .collect()
}
