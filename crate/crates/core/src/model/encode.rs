//! Input construction: corpus entries to padded id sequences.
//!
//! Source layout in changed-lines mode is `[cls] Add [sep] Del [sep]`, the
//! added/deleted lines each joined by newlines. All-modification mode feeds
//! the raw marked hunk lines as a single `[cls] lines [sep]` segment.

use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::corpus::CorpusEntry;
use crate::tokenizer::{Vocabulary, BOS_ID, CLS_ID, EOS_ID, PAD_ID, SEP_ID};

/// Which source encoding to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// Only the added and deleted lines (the main pipeline).
    #[default]
    ChangedLines,
    /// Every hunk line with its marker (the ablation baseline).
    AllModification,
}

impl InputMode {
    pub fn parse(s: &str) -> Option<InputMode> {
        match s {
            "changed_lines" | "changed-lines" => Some(InputMode::ChangedLines),
            "all_modification" | "all-modification" => Some(InputMode::AllModification),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            InputMode::ChangedLines => "changed_lines",
            InputMode::AllModification => "all_modification",
        }
    }
}

/// One example ready for the model: special-token-framed id sequences plus
/// padding masks (true = real token, always a prefix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedExample {
    pub source_ids: Vec<u32>,
    pub target_ids: Vec<u32>,
    pub source_mask: Vec<bool>,
    pub target_mask: Vec<bool>,
    /// Set when the entry had no content to encode (empty Add and Del).
    pub degenerate: bool,
}

impl EncodedExample {
    pub fn source_len(&self) -> usize {
        self.source_mask.iter().filter(|&&m| m).count()
    }

    pub fn target_len(&self) -> usize {
        self.target_mask.iter().filter(|&&m| m).count()
    }

    /// Extends both sequences with masked pad tokens up to the given sizes.
    pub fn pad_to(&mut self, source_len: usize, target_len: usize) {
        self.source_ids.resize(self.source_ids.len().max(source_len), PAD_ID);
        self.source_mask.resize(self.source_mask.len().max(source_len), false);
        self.target_ids.resize(self.target_ids.len().max(target_len), PAD_ID);
        self.target_mask.resize(self.target_mask.len().max(target_len), false);
    }
}

/// Pads every example in the batch to the batch maxima.
pub fn pad_batch(batch: &mut [EncodedExample]) {
    let src = batch.iter().map(|e| e.source_ids.len()).max().unwrap_or(0);
    let tgt = batch.iter().map(|e| e.target_ids.len()).max().unwrap_or(0);
    for e in batch {
        e.pad_to(src, tgt);
    }
}

/// Builds the source sequence `[cls] A [sep] B [sep]` (or `[cls] A [sep]`
/// for single-segment mode), truncating the tail while keeping `[cls]` and
/// every separator: the second segment shrinks before the first.
fn frame_source(add_ids: &[u32], del_ids: Option<&[u32]>, max_len: usize) -> Vec<u32> {
    let seps = 1 + del_ids.is_some() as usize;
    // [cls] and the separators always fit; config validation guarantees room.
    let budget = max_len.saturating_sub(1 + seps);
    let (keep_add, keep_del) = match del_ids {
        Some(del) => {
            let keep_add = add_ids.len().min(budget);
            let keep_del = del.len().min(budget - keep_add);
            (keep_add, keep_del)
        }
        None => (add_ids.len().min(budget), 0),
    };
    let mut ids = Vec::with_capacity(1 + keep_add + keep_del + seps);
    ids.push(CLS_ID);
    ids.extend_from_slice(&add_ids[..keep_add]);
    ids.push(SEP_ID);
    if let Some(del) = del_ids {
        ids.extend_from_slice(&del[..keep_del]);
        ids.push(SEP_ID);
    }
    ids
}

/// Encodes one corpus entry for the model under the given input mode.
pub fn build_input(
    entry: &CorpusEntry,
    vocab: &Vocabulary,
    mode: InputMode,
    config: &ModelConfig,
) -> EncodedExample {
    let source_ids = match mode {
        InputMode::ChangedLines => {
            let add_ids = vocab.encode(&entry.added.join("\n"));
            let del_ids = vocab.encode(&entry.deleted.join("\n"));
            frame_source(&add_ids, Some(&del_ids), config.max_source_len)
        }
        InputMode::AllModification => {
            // Fall back to reconstructed +/- lines when the corpus was mined
            // without context.
            let lines: Vec<String> = match &entry.all_lines {
                Some(lines) => lines.clone(),
                None => entry
                    .deleted
                    .iter()
                    .map(|l| format!("-{l}"))
                    .chain(entry.added.iter().map(|l| format!("+{l}")))
                    .collect(),
            };
            let ids = vocab.encode(&lines.join("\n"));
            frame_source(&ids, None, config.max_source_len)
        }
    };
    let degenerate = entry.added.is_empty() && entry.deleted.is_empty();

    let mut target_ids = Vec::new();
    target_ids.push(BOS_ID);
    target_ids.extend(vocab.encode(&entry.message));
    target_ids.push(EOS_ID);
    target_ids.truncate(config.max_target_len);

    EncodedExample {
        source_mask: vec![true; source_ids.len()],
        target_mask: vec![true; target_ids.len()],
        source_ids,
        target_ids,
        degenerate,
    }
}

/// Encodes a whole split in order.
pub fn encode_corpus(
    entries: &[CorpusEntry],
    vocab: &Vocabulary,
    mode: InputMode,
    config: &ModelConfig,
) -> Vec<EncodedExample> {
    entries
        .iter()
        .map(|e| build_input(e, vocab, mode, config))
        .collect()
}
