//! Corpus BLEU-4, perplexity, and the two ablation harnesses (input
//! encoding, initial weights).

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusEntry;
use crate::decode::{generate_message, DecodeConfig};
use crate::diff::Language;
use crate::error::{Error, Result};
use crate::model::{
    dataset_perplexity, encode_corpus, load_checkpoint_expecting, train, EpochMetrics, InputMode,
    ModelConfig, ModelParameters, TrainConfig,
};
use crate::tokenizer::Vocabulary;

const BLEU_EPS: f64 = 1e-9;
const MAX_ORDER: usize = 4;

/// Corpus-level BLEU-4 in [0, 100]: geometric mean of modified 1..4-gram
/// precisions times the brevity penalty. Orders with zero matches take an
/// epsilon numerator so the geometric mean stays defined; orders with no
/// possible n-grams at all (corpus shorter than n) are vacuous and count as
/// precision 1, which keeps BLEU(h,h) exactly 100 for short corpora.
pub fn bleu4(hypotheses: &[Vec<String>], references: &[Vec<String>]) -> Result<f64> {
    if hypotheses.len() != references.len() {
        return Err(Error::data(format!(
            "{} hypotheses vs {} references",
            hypotheses.len(),
            references.len()
        )));
    }
    if hypotheses.is_empty() {
        return Err(Error::data("BLEU of an empty corpus"));
    }
    let mut matches = [0u64; MAX_ORDER];
    let mut totals = [0u64; MAX_ORDER];
    let mut hyp_len = 0u64;
    let mut ref_len = 0u64;
    for (hyp, reference) in hypotheses.iter().zip(references) {
        hyp_len += hyp.len() as u64;
        ref_len += reference.len() as u64;
        for n in 1..=MAX_ORDER {
            if hyp.len() < n {
                continue;
            }
            totals[n - 1] += (hyp.len() - n + 1) as u64;
            let mut ref_counts: HashMap<&[String], u64> = HashMap::new();
            if reference.len() >= n {
                for gram in reference.windows(n) {
                    *ref_counts.entry(gram).or_insert(0) += 1;
                }
            }
            let mut hyp_counts: HashMap<&[String], u64> = HashMap::new();
            for gram in hyp.windows(n) {
                *hyp_counts.entry(gram).or_insert(0) += 1;
            }
            for (gram, count) in hyp_counts {
                let clip = ref_counts.get(gram).copied().unwrap_or(0);
                matches[n - 1] += count.min(clip);
            }
        }
    }
    if hyp_len == 0 {
        return Ok(0.0);
    }
    let mut log_precision_sum = 0.0;
    for n in 0..MAX_ORDER {
        let p = if totals[n] == 0 {
            1.0
        } else if matches[n] == 0 {
            BLEU_EPS / totals[n] as f64
        } else {
            matches[n] as f64 / totals[n] as f64
        };
        log_precision_sum += p.ln();
    }
    let brevity = if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    };
    Ok(100.0 * brevity * (log_precision_sum / MAX_ORDER as f64).exp())
}

/// Whitespace tokenization used for BLEU; generated and reference messages
/// are compared exactly as decoded.
pub fn bleu_tokens(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

/// Perplexity of a corpus split: exp of mean per-token NLL over all non-pad
/// target tokens.
pub fn perplexity(
    params: &ModelParameters,
    model_config: &ModelConfig,
    entries: &[CorpusEntry],
    vocab: &Vocabulary,
    mode: InputMode,
) -> Result<f64> {
    if entries.is_empty() {
        return Err(Error::data("perplexity of an empty split"));
    }
    let examples = encode_corpus(entries, vocab, mode, model_config);
    dataset_perplexity(params, model_config, &examples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LanguageEval {
    pub bleu4: f64,
    pub ppl: f64,
    pub n_examples: usize,
}

/// Evaluation summary for one parameter set on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub bleu4: f64,
    pub ppl: f64,
    pub n_examples: usize,
    pub per_language: BTreeMap<Language, LanguageEval>,
}

/// Generates a message for every entry (beam search) and scores BLEU-4 and
/// perplexity, overall and per language.
pub fn evaluate(
    params: &ModelParameters,
    model_config: &ModelConfig,
    entries: &[CorpusEntry],
    vocab: &Vocabulary,
    mode: InputMode,
    decode_config: &DecodeConfig,
) -> Result<EvalReport> {
    if entries.is_empty() {
        return Err(Error::data("evaluation of an empty split"));
    }
    let mut hyps: Vec<Vec<String>> = Vec::with_capacity(entries.len());
    let mut refs: Vec<Vec<String>> = Vec::with_capacity(entries.len());
    for entry in entries {
        let generated = generate_message(params, model_config, entry, vocab, mode, decode_config)?;
        hyps.push(bleu_tokens(&generated.message));
        refs.push(bleu_tokens(&entry.message));
    }
    let overall_bleu = bleu4(&hyps, &refs)?;
    let overall_ppl = perplexity(params, model_config, entries, vocab, mode)?;

    let mut per_language = BTreeMap::new();
    let mut by_lang: BTreeMap<Language, Vec<usize>> = BTreeMap::new();
    for (i, e) in entries.iter().enumerate() {
        by_lang.entry(e.language).or_default().push(i);
    }
    for (lang, idxs) in by_lang {
        let lang_hyps: Vec<Vec<String>> = idxs.iter().map(|&i| hyps[i].clone()).collect();
        let lang_refs: Vec<Vec<String>> = idxs.iter().map(|&i| refs[i].clone()).collect();
        let lang_entries: Vec<CorpusEntry> = idxs.iter().map(|&i| entries[i].clone()).collect();
        per_language.insert(
            lang,
            LanguageEval {
                bleu4: bleu4(&lang_hyps, &lang_refs)?,
                ppl: perplexity(params, model_config, &lang_entries, vocab, mode)?,
                n_examples: idxs.len(),
            },
        );
    }
    Ok(EvalReport {
        bleu4: overall_bleu,
        ppl: overall_ppl,
        n_examples: entries.len(),
        per_language,
    })
}

/// One trained-and-evaluated ablation variant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRun {
    pub label: String,
    pub report: EvalReport,
    pub best_dev_ppl: f64,
    pub metrics: Vec<EpochMetrics>,
}

/// Shared data and knobs for an ablation: the splits are encoded per run.
pub struct AblationInputs<'a> {
    pub train_entries: &'a [CorpusEntry],
    pub valid_entries: &'a [CorpusEntry],
    pub test_entries: &'a [CorpusEntry],
    pub vocab: &'a Vocabulary,
    pub model_config: &'a ModelConfig,
    pub train_config: &'a TrainConfig,
    pub decode_config: &'a DecodeConfig,
}

fn run_one(
    inputs: &AblationInputs<'_>,
    label: String,
    mode: InputMode,
    init: ModelParameters,
) -> Result<AblationRun> {
    let train_set = encode_corpus(inputs.train_entries, inputs.vocab, mode, inputs.model_config);
    let valid_set = encode_corpus(inputs.valid_entries, inputs.vocab, mode, inputs.model_config);
    let outcome = train(
        init,
        &train_set,
        &valid_set,
        inputs.model_config,
        inputs.train_config,
    )?;
    let report = evaluate(
        &outcome.best_params,
        inputs.model_config,
        inputs.test_entries,
        inputs.vocab,
        mode,
        inputs.decode_config,
    )?;
    Ok(AblationRun {
        label,
        report,
        best_dev_ppl: outcome.best_dev_ppl,
        metrics: outcome.metrics,
    })
}

/// Trains and evaluates once per input encoding with identical seeds and
/// configs; the changed-lines run comes first.
pub fn ablate_input_mode(inputs: &AblationInputs<'_>) -> Result<Vec<AblationRun>> {
    let mut runs = Vec::with_capacity(2);
    for mode in [InputMode::ChangedLines, InputMode::AllModification] {
        let init = ModelParameters::init(inputs.model_config, inputs.train_config.seed);
        runs.push(run_one(inputs, mode.label().to_string(), mode, init)?);
    }
    Ok(runs)
}

/// Initialization ablation: one training run per (label, checkpoint) row
/// with identical data and seed. `None` means random initialization. Every
/// checkpoint is validated before any training starts.
pub fn ablate_init_weight(
    inputs: &AblationInputs<'_>,
    checkpoints: &[(String, Option<PathBuf>)],
    mode: InputMode,
) -> Result<Vec<AblationRun>> {
    if checkpoints.is_empty() {
        return Err(Error::data("no initializations given"));
    }
    let mut initializations = Vec::with_capacity(checkpoints.len());
    for (label, path) in checkpoints {
        let params = match path {
            None => ModelParameters::init(inputs.model_config, inputs.train_config.seed),
            Some(path) => {
                let stored = load_checkpoint_expecting(path, inputs.model_config)?;
                if stored.vocab_hash != inputs.vocab.hash() {
                    return Err(Error::data(format!(
                        "checkpoint {} was trained with a different vocabulary",
                        path.display()
                    )));
                }
                stored.params
            }
        };
        initializations.push((label.clone(), params));
    }
    initializations
        .into_iter()
        .map(|(label, init)| run_one(inputs, label, mode, init))
        .collect()
}

/// Plain-text table for the input-mode ablation.
pub fn format_input_ablation(runs: &[AblationRun]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20} {:>8} {:>10}\n",
        "Input Type", "BLEU-4", "PPL (dev)"
    ));
    for run in runs {
        out.push_str(&format!(
            "{:<20} {:>8.2} {:>10.2}\n",
            run.label, run.report.bleu4, run.best_dev_ppl
        ));
    }
    out
}

/// Plain-text table for the initialization ablation: one row per
/// initialization, per-language BLEU-4/PPL columns plus the overall pair.
pub fn format_init_ablation(runs: &[AblationRun]) -> String {
    let mut languages: Vec<Language> = Vec::new();
    for run in runs {
        for lang in run.report.per_language.keys() {
            if !languages.contains(lang) {
                languages.push(*lang);
            }
        }
    }
    languages.sort();
    let mut out = String::new();
    out.push_str(&format!("{:<24}", "Initial Weight"));
    for lang in &languages {
        out.push_str(&format!(" {:>16}", lang.to_string()));
    }
    out.push_str(&format!(" {:>16}\n", "Overall"));
    for run in runs {
        out.push_str(&format!("{:<24}", run.label));
        for lang in &languages {
            match run.report.per_language.get(lang) {
                Some(cell) => {
                    out.push_str(&format!(" {:>7.2}/{:>8.2}", cell.bleu4, cell.ppl));
                }
                None => out.push_str(&format!(" {:>16}", "-")),
            }
        }
        out.push_str(&format!(
            " {:>7.2}/{:>8.2}\n",
            run.report.bleu4, run.best_dev_ppl
        ));
    }
    out.push_str("(cells are BLEU-4 (test) / PPL; Overall PPL is the best dev PPL)\n");
    out
}
