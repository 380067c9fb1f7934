//! Corpus persistence, statistics, and train/validation/test splitting.
//!
//! The on-disk format is line-delimited JSON, one entry per line, UTF-8,
//! with added/deleted lines preserved verbatim including leading whitespace.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff::{CommitRecord, Language};
use crate::error::{Error, Result};
use crate::tokenizer::fnv1a64;

/// One curated (code modification, commit message) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    /// Stable hash of (repo, commit hash, file path); unique corpus-wide.
    pub id: String,
    pub language: Language,
    pub added: Vec<String>,
    pub deleted: Vec<String>,
    pub message: String,
    /// Originating repository; enables repo-grouped splits and repo counts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repo: Option<String>,
    /// Full marked hunk lines (context included) for the all-modification
    /// input encoding; absent when the corpus was mined without context.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub all_lines: Option<Vec<String>>,
}

/// Derives the stable entry id for one modification of one commit.
pub fn entry_id(repo: &str, hash: &str, file_path: &str) -> String {
    let key = format!("{repo}\u{0}{hash}\u{0}{file_path}");
    format!("{:016x}", fnv1a64(key.as_bytes()))
}

/// Expands an accepted commit into one corpus entry per modification.
/// `keep_context` controls whether the marked hunk lines are carried along
/// for the input-mode ablation.
pub fn entries_from_record(record: &CommitRecord, keep_context: bool) -> Vec<CorpusEntry> {
    record
        .modifications
        .iter()
        .map(|m| CorpusEntry {
            id: entry_id(&record.repo, &record.hash, &m.file_path),
            language: m.language,
            added: m.added.clone(),
            deleted: m.deleted.clone(),
            message: record.message.clone(),
            repo: Some(record.repo.clone()),
            all_lines: keep_context.then(|| m.all_lines.clone()),
        })
        .collect()
}

/// Merges every supported modification of one diff into a single entry:
/// added lines concatenated across files in document order, deleted
/// likewise. Returns `None` when the diff has no supported modifications.
pub fn entry_from_modifications(mods: &crate::diff::DiffModifications) -> Option<CorpusEntry> {
    let first = mods.modifications.first()?;
    let mut added = Vec::new();
    let mut deleted = Vec::new();
    let mut all_lines = Vec::new();
    for m in &mods.modifications {
        added.extend(m.added.iter().cloned());
        deleted.extend(m.deleted.iter().cloned());
        all_lines.extend(m.all_lines.iter().cloned());
    }
    Some(CorpusEntry {
        id: "staged".into(),
        language: first.language,
        added,
        deleted,
        message: String::new(),
        repo: None,
        all_lines: Some(all_lines),
    })
}

/// Writes entries as line-delimited JSON, enforcing corpus-wide id
/// uniqueness. Returns the number written; on failure the error reports how
/// many records made it out.
pub fn write_corpus<'a, I>(entries: I, path: &Path) -> Result<usize>
where
    I: IntoIterator<Item = &'a CorpusEntry>,
{
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    let mut written = 0usize;
    let mut seen = BTreeSet::new();
    for entry in entries {
        if !seen.insert(entry.id.clone()) {
            return Err(Error::data(format!(
                "duplicate corpus id {:?} after {written} records",
                entry.id
            )));
        }
        let line = serde_json::to_string(entry)?;
        let io_result = out
            .write_all(line.as_bytes())
            .and_then(|()| out.write_all(b"\n"));
        if let Err(e) = io_result {
            return Err(Error::data(format!(
                "corpus write failed after {written} records: {e}"
            )));
        }
        written += 1;
    }
    out.flush()?;
    Ok(written)
}

/// Reads a corpus file written by [`write_corpus`].
pub fn read_corpus(path: &Path) -> Result<Vec<CorpusEntry>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut entries = Vec::new();
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: CorpusEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: no + 1,
            msg: format!("bad corpus record: {e}"),
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Split fractions; must sum to 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub valid_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
    /// Keep all entries of one repository in the same part (leakage guard);
    /// off by default.
    #[serde(default)]
    pub by_repo: bool,
}

impl Default for SplitSpec {
    fn default() -> SplitSpec {
        SplitSpec {
            train_frac: 0.8,
            valid_frac: 0.1,
            test_frac: 0.1,
            seed: 42,
            by_repo: false,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let sum = self.train_frac + self.valid_frac + self.test_frac;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::data(format!("split fractions sum to {sum}, not 1")));
        }
        if self.train_frac <= 0.0 || self.valid_frac <= 0.0 || self.test_frac <= 0.0 {
            return Err(Error::data("every split fraction must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<CorpusEntry>,
    pub valid: Vec<CorpusEntry>,
    pub test: Vec<CorpusEntry>,
}

/// Seed-deterministic shuffle and partition. Validation and test take
/// `floor(n * frac)` entries each; the remainder goes to train.
pub fn split(entries: &[CorpusEntry], spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    if entries.is_empty() {
        return Err(Error::data("cannot split an empty corpus"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    if spec.by_repo {
        // Shuffle repo groups, then deal whole groups into the parts by the
        // same floor-sized quotas counted in entries.
        let mut groups: BTreeMap<String, Vec<&CorpusEntry>> = BTreeMap::new();
        for e in entries {
            let key = e.repo.clone().unwrap_or_else(|| e.id.clone());
            groups.entry(key).or_default().push(e);
        }
        let mut keys: Vec<&String> = groups.keys().collect();
        keys.shuffle(&mut rng);
        let n = entries.len();
        let n_valid = (n as f64 * spec.valid_frac).floor() as usize;
        let n_test = (n as f64 * spec.test_frac).floor() as usize;
        let mut valid = Vec::new();
        let mut test = Vec::new();
        let mut train = Vec::new();
        for key in keys {
            let group: Vec<CorpusEntry> = groups[key].iter().map(|&e| e.clone()).collect();
            if valid.len() + group.len() <= n_valid {
                valid.extend(group);
            } else if test.len() + group.len() <= n_test {
                test.extend(group);
            } else {
                train.extend(group);
            }
        }
        return Ok(Splits { train, valid, test });
    }

    let mut shuffled: Vec<CorpusEntry> = entries.to_vec();
    shuffled.shuffle(&mut rng);
    let n = shuffled.len();
    let n_valid = (n as f64 * spec.valid_frac).floor() as usize;
    let n_test = (n as f64 * spec.test_frac).floor() as usize;
    let n_train = n - n_valid - n_test;
    let test = shuffled.split_off(n_train + n_valid);
    let valid = shuffled.split_off(n_train);
    Ok(Splits {
        train: shuffled,
        valid,
        test,
    })
}

/// Corpus statistics: the per-language and per-verb views plus size
/// percentiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticsReport {
    pub total_entries: usize,
    pub repo_count: usize,
    pub per_language: BTreeMap<Language, usize>,
    /// First token of each message, lowercased.
    pub verb_histogram: BTreeMap<String, usize>,
    pub message_tokens: Percentiles,
    pub code_tokens: Percentiles,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Percentiles {
    pub p50: usize,
    pub p90: usize,
    pub p95: usize,
    pub max: usize,
}

fn percentiles(mut values: Vec<usize>) -> Percentiles {
    if values.is_empty() {
        return Percentiles::default();
    }
    values.sort_unstable();
    let pick = |q: f64| values[((values.len() - 1) as f64 * q).round() as usize];
    Percentiles {
        p50: pick(0.50),
        p90: pick(0.90),
        p95: pick(0.95),
        max: *values.last().unwrap(),
    }
}

pub fn stats(entries: &[CorpusEntry]) -> StatisticsReport {
    let mut per_language = BTreeMap::new();
    let mut verb_histogram: BTreeMap<String, usize> = BTreeMap::new();
    let mut repos = BTreeSet::new();
    let mut message_lens = Vec::with_capacity(entries.len());
    let mut code_lens = Vec::with_capacity(entries.len());
    for e in entries {
        *per_language.entry(e.language).or_insert(0) += 1;
        if let Some(first) = e.message.split_whitespace().next() {
            *verb_histogram.entry(first.to_lowercase()).or_insert(0) += 1;
        }
        if let Some(repo) = &e.repo {
            repos.insert(repo.clone());
        }
        message_lens.push(e.message.split_whitespace().count());
        let code: usize = e
            .added
            .iter()
            .chain(e.deleted.iter())
            .map(|l| l.split_whitespace().count())
            .sum();
        code_lens.push(code);
    }
    StatisticsReport {
        total_entries: entries.len(),
        repo_count: repos.len(),
        per_language,
        verb_histogram,
        message_tokens: percentiles(message_lens),
        code_tokens: percentiles(code_lens),
    }
}

impl StatisticsReport {
    /// Plain-text table: one row per language plus totals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>10}\n",
            "Language", "Pairs"
        ));
        for (lang, count) in &self.per_language {
            out.push_str(&format!("{:<12} {:>10}\n", lang.to_string(), count));
        }
        out.push_str(&format!(
            "{:<12} {:>10}   repositories: {}\n",
            "Total", self.total_entries, self.repo_count
        ));
        let mut verbs: Vec<(&String, &usize)> = self.verb_histogram.iter().collect();
        verbs.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
        if !verbs.is_empty() {
            out.push_str("Top first tokens:");
            for (verb, count) in verbs.iter().take(13) {
                out.push_str(&format!(" {verb}({count})"));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "Message tokens p50/p90/p95/max: {}/{}/{}/{}\n",
            self.message_tokens.p50,
            self.message_tokens.p90,
            self.message_tokens.p95,
            self.message_tokens.max
        ));
        out.push_str(&format!(
            "Code tokens    p50/p90/p95/max: {}/{}/{}/{}\n",
            self.code_tokens.p50, self.code_tokens.p90, self.code_tokens.p95, self.code_tokens.max
        ));
        out
    }
}
