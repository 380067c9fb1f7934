//! Repository mining: enumerate qualifying commits, extract per-file code
//! modifications through the diff parser, and apply the curation rules.
//!
//! Repositories are processed concurrently up to `clone_workers`; each
//! repository's commit walk is sequential and the merged output follows the
//! repo-list order, so mining is deterministic for a fixed repo state.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use git2::{Delta, DiffFindOptions, DiffOptions, Patch, Repository, Sort};
use serde::{Deserialize, Serialize};

use crate::diff::{modifications_from_diff, CodeModification, CommitRecord, Language};
use crate::error::{Error, Result};
use crate::tokenizer::CodeTokenizer;

/// The thirteen most frequent first-word verbs kept by default. The exact
/// top-13 set depends on the mined corpus, so the list is configurable;
/// this default covers the most common commit verbs.
pub const DEFAULT_VERB_WHITELIST: [&str; 13] = [
    "add", "fix", "update", "remove", "use", "upgrade", "change", "make", "move", "create",
    "improve", "implement", "support",
];

/// Broad common-verb lexicon backing the "begins with a verb" check. A first
/// token whose lemma is outside this set is not treated as an imperative
/// verb at all (R7); the narrow whitelist (R8) is checked afterwards.
const COMMON_VERBS: [&str; 96] = [
    "add", "adjust", "allow", "annotate", "apply", "avoid", "bump", "catch", "change", "check",
    "clean", "cleanup", "configure", "convert", "correct", "create", "delete", "deprecate",
    "disable", "document", "drop", "enable", "enforce", "ensure", "exclude", "expose", "extend",
    "extract", "fix", "format", "handle", "hide", "ignore", "implement", "improve", "include",
    "inline", "install", "introduce", "lint", "log", "make", "merge", "migrate", "move",
    "optimize", "pass", "patch", "polish", "port", "prepare", "prevent", "print", "raise",
    "refactor", "register", "release", "remove", "rename", "reorder", "replace", "require",
    "reset", "resolve", "restore", "return", "revert", "revise", "rework", "rewrite", "save",
    "set", "silence", "simplify", "skip", "sort", "speed", "split", "stop", "support",
    "suppress", "switch", "test", "throw", "translate", "tweak", "unify", "uninstall", "unwrap",
    "update", "upgrade", "use", "validate", "verify", "wrap", "write",
];

/// Only the default branch is walked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BranchPolicy {
    #[default]
    DefaultBranchOnly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinerConfig {
    /// Repository specifiers: local paths, URLs, or `owner/name` shorthand.
    pub repo_list: Vec<String>,
    pub max_commits_per_repo: usize,
    /// File extensions (with leading dot) that qualify a commit.
    pub allowed_extensions: Vec<String>,
    pub branch_policy: BranchPolicy,
    pub exclude_merges: bool,
    pub max_files_changed: usize,
    pub max_code_tokens: usize,
    /// Lowercase lemmas accepted as the message's first word.
    pub verb_whitelist: Vec<String>,
    pub clone_workers: usize,
    /// Where remote repositories are cloned.
    pub workdir: PathBuf,
    /// Carry full marked hunk lines into corpus entries (needed by the
    /// input-mode ablation).
    pub keep_context: bool,
}

impl Default for MinerConfig {
    fn default() -> MinerConfig {
        MinerConfig {
            repo_list: Vec::new(),
            max_commits_per_repo: 50,
            allowed_extensions: [".py", ".php", ".js", ".java", ".go", ".rb"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            branch_policy: BranchPolicy::DefaultBranchOnly,
            exclude_merges: true,
            max_files_changed: 2,
            max_code_tokens: 32,
            verb_whitelist: DEFAULT_VERB_WHITELIST.iter().map(|s| s.to_string()).collect(),
            clone_workers: 4,
            workdir: PathBuf::from("mined-repos"),
            keep_context: true,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_commits_per_repo < 1 {
            return Err(Error::data("max_commits_per_repo must be at least 1"));
        }
        if self.max_files_changed < 1 {
            return Err(Error::data("max_files_changed must be at least 1"));
        }
        if self.max_code_tokens < 1 {
            return Err(Error::data("max_code_tokens must be at least 1"));
        }
        if self.verb_whitelist.is_empty() {
            return Err(Error::data("verb_whitelist must not be empty"));
        }
        if let Some(v) = self
            .verb_whitelist
            .iter()
            .find(|v| v.chars().any(|c| c.is_uppercase()))
        {
            return Err(Error::data(format!("verb_whitelist entry {v:?} is not lowercase")));
        }
        Ok(())
    }

    fn extension_allowed(&self, path: &str) -> bool {
        match Path::new(path).extension().and_then(|e| e.to_str()) {
            Some(ext) => self.allowed_extensions.contains(&format!(".{ext}")),
            None => false,
        }
    }
}

/// Why a commit was rejected. Identifiers mirror the curation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RejectRule {
    R1RepoCap,
    R2FileCount,
    R3IssueNumber,
    R4NonEnglish,
    R6TokenLength,
    R7NotVerbStart,
    R8VerbNotWhitelisted,
    MergeCommit,
    NoQualifyingFiles,
}

impl fmt::Display for RejectRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectRule::R1RepoCap => "R1_repo_cap",
            RejectRule::R2FileCount => "R2_file_count",
            RejectRule::R3IssueNumber => "R3_issue_number",
            RejectRule::R4NonEnglish => "R4_non_english",
            RejectRule::R6TokenLength => "R6_token_length",
            RejectRule::R7NotVerbStart => "R7_not_verb_start",
            RejectRule::R8VerbNotWhitelisted => "R8_verb_not_whitelisted",
            RejectRule::MergeCommit => "MERGE_COMMIT",
            RejectRule::NoQualifyingFiles => "NO_QUALIFYING_FILES",
        };
        f.write_str(s)
    }
}

/// Outcome of the filtering function for one commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterDecision {
    pub accepted: bool,
    pub rejected_by: Option<RejectRule>,
}

impl FilterDecision {
    pub fn accept() -> FilterDecision {
        FilterDecision {
            accepted: true,
            rejected_by: None,
        }
    }

    pub fn reject(rule: RejectRule) -> FilterDecision {
        FilterDecision {
            accepted: false,
            rejected_by: Some(rule),
        }
    }
}

/// Takes the first line of a commit message and trims surrounding space.
pub fn normalize_message(raw: &str) -> String {
    raw.lines().next().unwrap_or("").trim().to_string()
}

fn contains_issue_reference(msg: &str) -> bool {
    let bytes = msg.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit) {
            return true;
        }
    }
    // Bare GH-123 style references, case-insensitive.
    let lower = msg.to_ascii_lowercase();
    let lb = lower.as_bytes();
    for (i, window) in lb.windows(3).enumerate() {
        if window == b"gh-"
            && lb.get(i + 3).is_some_and(u8::is_ascii_digit)
            && (i == 0 || !lb[i - 1].is_ascii_alphanumeric())
        {
            return true;
        }
    }
    false
}

fn looks_english(msg: &str) -> bool {
    let total = msg.chars().count();
    if total == 0 {
        return false;
    }
    let ascii = msg.chars().filter(char::is_ascii).count();
    if (ascii as f64) < 0.9 * total as f64 {
        return false;
    }
    match msg.split_whitespace().next() {
        Some(first) => first.chars().next().is_some_and(|c| c.is_ascii_alphabetic()),
        None => false,
    }
}

/// Candidate lemmas for a first word: the word itself plus simple
/// suffix-stripped forms ("fixing" -> "fix", "updated" -> "update").
fn lemma_candidates(word: &str) -> Vec<String> {
    let w = word.to_lowercase();
    let mut out = vec![w.clone()];
    let undouble = |stem: &str| -> Option<String> {
        let b = stem.as_bytes();
        if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] && b[b.len() - 1].is_ascii_alphabetic()
        {
            Some(stem[..stem.len() - 1].to_string())
        } else {
            None
        }
    };
    if let Some(s) = w.strip_suffix("ies") {
        out.push(format!("{s}y"));
    }
    if let Some(s) = w.strip_suffix("es") {
        out.push(s.to_string());
    }
    if let Some(s) = w.strip_suffix('s') {
        out.push(s.to_string());
    }
    if let Some(s) = w.strip_suffix("ed") {
        out.push(s.to_string());
        out.push(format!("{s}e"));
        out.extend(undouble(s));
    }
    if let Some(s) = w.strip_suffix("ing") {
        out.push(s.to_string());
        out.push(format!("{s}e"));
        out.extend(undouble(s));
    }
    out
}

fn first_word_lemmas(message: &str) -> Option<Vec<String>> {
    let token = message.split_whitespace().next()?;
    let token = token.trim_matches(|c: char| !c.is_ascii_alphabetic());
    if token.is_empty() {
        return None;
    }
    Some(lemma_candidates(token))
}

/// Applies curation rules R2..R8 in order; the first failing rule is
/// recorded. R5 (first-line normalization) happens at record construction.
pub fn filter_commit(
    record: &CommitRecord,
    config: &MinerConfig,
    tokenizer: &dyn CodeTokenizer,
) -> FilterDecision {
    if record.files_changed == 0 || record.files_changed > config.max_files_changed {
        return FilterDecision::reject(RejectRule::R2FileCount);
    }
    if contains_issue_reference(&record.message_raw) {
        return FilterDecision::reject(RejectRule::R3IssueNumber);
    }
    if !looks_english(&record.message_raw) {
        return FilterDecision::reject(RejectRule::R4NonEnglish);
    }
    for modification in &record.modifications {
        let added = modification.added.join("\n");
        let deleted = modification.deleted.join("\n");
        let tokens = tokenizer.token_count(&added) + tokenizer.token_count(&deleted);
        if tokens > config.max_code_tokens {
            return FilterDecision::reject(RejectRule::R6TokenLength);
        }
    }
    let Some(lemmas) = first_word_lemmas(&record.message) else {
        return FilterDecision::reject(RejectRule::R7NotVerbStart);
    };
    if !lemmas.iter().any(|l| COMMON_VERBS.contains(&l.as_str())) {
        return FilterDecision::reject(RejectRule::R7NotVerbStart);
    }
    if !lemmas
        .iter()
        .any(|l| config.verb_whitelist.iter().any(|v| v == l))
    {
        return FilterDecision::reject(RejectRule::R8VerbNotWhitelisted);
    }
    FilterDecision::accept()
}

/// A commit surviving enumeration, before modification extraction.
#[derive(Debug, Clone)]
pub struct RawCommit {
    pub hash: String,
    pub message_raw: String,
    pub time: i64,
}

/// Enumeration result: the capped qualifying commits plus tallies for
/// everything enumerated but not yielded.
#[derive(Debug, Default)]
pub struct CommitEnumeration {
    pub commits: Vec<RawCommit>,
    pub merge_commits: usize,
    pub no_qualifying_files: usize,
    pub over_cap: usize,
}

impl CommitEnumeration {
    pub fn examined(&self) -> usize {
        self.commits.len() + self.merge_commits + self.no_qualifying_files + self.over_cap
    }
}

fn commit_diff<'r>(
    repo: &'r Repository,
    commit: &git2::Commit,
    context_lines: u32,
) -> std::result::Result<git2::Diff<'r>, git2::Error> {
    let tree = commit.tree()?;
    let parent_tree = match commit.parent(0) {
        Ok(parent) => Some(parent.tree()?),
        Err(_) => None, // root commit diffs against the empty tree
    };
    let mut opts = DiffOptions::new();
    opts.context_lines(context_lines);
    let mut diff =
        repo.diff_tree_to_tree(parent_tree.as_ref(), Some(&tree), Some(&mut opts))?;
    // Detect pure renames so they drop out instead of surfacing as
    // full-file add/delete pairs.
    let mut find = DiffFindOptions::new();
    find.renames(true);
    diff.find_similar(Some(&mut find))?;
    Ok(diff)
}

fn delta_path(delta: &git2::DiffDelta) -> String {
    delta
        .new_file()
        .path()
        .or_else(|| delta.old_file().path())
        .map(|p| p.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Walks the default branch, excluding merge commits when configured, and
/// keeps commits touching at least one allowed-extension file. Yields the
/// newest `max_commits_per_repo` qualifying commits (ties broken by hash).
pub fn get_commits(repo: &Repository, config: &MinerConfig) -> Result<CommitEnumeration> {
    let map_err = |e: git2::Error| Error::Repo {
        repo: repo.path().display().to_string(),
        msg: e.to_string(),
    };
    let mut walk = repo.revwalk().map_err(map_err)?;
    walk.set_sorting(Sort::TIME).map_err(map_err)?;
    walk.push_head().map_err(map_err)?;

    let mut enumeration = CommitEnumeration::default();
    let mut qualifying: Vec<RawCommit> = Vec::new();
    for oid in walk {
        let oid = oid.map_err(map_err)?;
        let commit = repo.find_commit(oid).map_err(map_err)?;
        if config.exclude_merges && commit.parent_count() > 1 {
            enumeration.merge_commits += 1;
            continue;
        }
        let diff = commit_diff(repo, &commit, 3).map_err(map_err)?;
        let touches_allowed = diff
            .deltas()
            .any(|d| config.extension_allowed(&delta_path(&d)));
        if !touches_allowed {
            enumeration.no_qualifying_files += 1;
            continue;
        }
        qualifying.push(RawCommit {
            hash: oid.to_string(),
            message_raw: commit.message().unwrap_or("").to_string(),
            time: commit.time().seconds(),
        });
    }
    qualifying.sort_by(|a, b| b.time.cmp(&a.time).then_with(|| a.hash.cmp(&b.hash)));
    if qualifying.len() > config.max_commits_per_repo {
        enumeration.over_cap = qualifying.len() - config.max_commits_per_repo;
        qualifying.truncate(config.max_commits_per_repo);
    }
    enumeration.commits = qualifying;
    Ok(enumeration)
}

/// Extracts one [`CodeModification`] per changed allowed-extension file,
/// returning the total changed-file count alongside. Binary files are
/// skipped; pure renames yield nothing.
pub fn get_modifications(
    repo: &Repository,
    hash: &str,
    config: &MinerConfig,
) -> Result<(Vec<CodeModification>, usize)> {
    let map_err = |e: git2::Error| Error::Repo {
        repo: repo.path().display().to_string(),
        msg: format!("commit {hash}: {e}"),
    };
    let oid = git2::Oid::from_str(hash).map_err(map_err)?;
    let commit = repo.find_commit(oid).map_err(map_err)?;
    let diff = commit_diff(repo, &commit, 3).map_err(map_err)?;
    let files_changed = diff.deltas().len();

    let mut modifications = Vec::new();
    for (idx, delta) in diff.deltas().enumerate() {
        let path = delta_path(&delta);
        if !config.extension_allowed(&path) {
            continue;
        }
        if delta.status() == Delta::Unmodified || delta.new_file().is_binary() {
            continue;
        }
        let Some(mut patch) = Patch::from_diff(&diff, idx).map_err(map_err)? else {
            continue; // binary or empty patch
        };
        let buf = patch.to_buf().map_err(map_err)?;
        let text = std::str::from_utf8(&buf).unwrap_or("");
        let parsed = modifications_from_diff(text)?;
        modifications.extend(parsed.modifications);
    }
    Ok((modifications, files_changed))
}

/// Builds a full [`CommitRecord`] for one enumerated commit.
pub fn build_record(
    repo: &Repository,
    repo_name: &str,
    raw: &RawCommit,
    config: &MinerConfig,
) -> Result<CommitRecord> {
    let (modifications, files_changed) = get_modifications(repo, &raw.hash, config)?;
    Ok(CommitRecord {
        repo: repo_name.to_string(),
        hash: raw.hash.clone(),
        message_raw: raw.message_raw.clone(),
        message: normalize_message(&raw.message_raw),
        modifications,
        files_changed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepoFailure {
    pub repo: String,
    pub error: String,
}

/// Aggregated tallies for one mining run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MiningReport {
    pub repos_total: usize,
    pub repos_mined: usize,
    pub repos_failed: Vec<RepoFailure>,
    pub commits_examined: usize,
    pub accepted: usize,
    pub rejected: BTreeMap<String, usize>,
    pub accepted_per_language: BTreeMap<Language, usize>,
}

impl MiningReport {
    fn tally_reject(&mut self, rule: RejectRule, n: usize) {
        if n > 0 {
            *self.rejected.entry(rule.to_string()).or_insert(0) += n;
        }
    }

    pub fn rejected_total(&self) -> usize {
        self.rejected.values().sum()
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "repositories: {} mined, {} failed of {}\n",
            self.repos_mined,
            self.repos_failed.len(),
            self.repos_total
        ));
        out.push_str(&format!(
            "commits: {} examined, {} accepted, {} rejected\n",
            self.commits_examined,
            self.accepted,
            self.rejected_total()
        ));
        for (rule, count) in &self.rejected {
            out.push_str(&format!("  {rule:<24} {count}\n"));
        }
        for (lang, count) in &self.accepted_per_language {
            out.push_str(&format!("  accepted {lang:<15} {count}\n"));
        }
        for failure in &self.repos_failed {
            out.push_str(&format!("  failed {}: {}\n", failure.repo, failure.error));
        }
        out
    }
}

#[derive(Debug, Default)]
pub struct MiningOutcome {
    /// Accepted records in repo-list order, newest first within a repo.
    pub records: Vec<CommitRecord>,
    pub report: MiningReport,
}

fn looks_like_url(spec: &str) -> bool {
    ["http://", "https://", "git://", "ssh://", "file://"]
        .iter()
        .any(|p| spec.starts_with(p))
}

fn clone_destination(spec: &str, workdir: &Path) -> PathBuf {
    let sanitized: String = spec
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect();
    workdir.join(sanitized)
}

/// Opens a local repository or clones a remote one into the workdir.
/// `owner/name` shorthand resolves to GitHub.
pub fn open_or_clone(spec: &str, workdir: &Path) -> Result<(Repository, String)> {
    let repo_err = |msg: String| Error::Repo {
        repo: spec.to_string(),
        msg,
    };
    if !looks_like_url(spec) && Path::new(spec).exists() {
        let repo = Repository::open(spec).map_err(|e| repo_err(e.to_string()))?;
        return Ok((repo, spec.to_string()));
    }
    let url = if looks_like_url(spec) {
        spec.to_string()
    } else if spec.split('/').count() == 2 && !spec.contains(char::is_whitespace) {
        format!("https://github.com/{spec}.git")
    } else {
        return Err(repo_err("not a local path, URL, or owner/name".into()));
    };
    let dest = clone_destination(spec, workdir);
    if dest.join(".git").exists() || dest.join("HEAD").exists() {
        let repo = Repository::open(&dest).map_err(|e| repo_err(e.to_string()))?;
        return Ok((repo, spec.to_string()));
    }
    std::fs::create_dir_all(workdir)?;
    let repo = git2::build::RepoBuilder::new()
        .clone(&url, &dest)
        .map_err(|e| repo_err(format!("clone {url}: {e}")))?;
    Ok((repo, spec.to_string()))
}

#[derive(Default)]
struct MinedRepo {
    records: Vec<CommitRecord>,
    enumeration: CommitEnumeration,
    filter_tallies: BTreeMap<RejectRule, usize>,
    per_language: BTreeMap<Language, usize>,
}

struct RepoResult {
    mined: MinedRepo,
    error: Option<String>,
}

fn mine_one_repo(spec: &str, config: &MinerConfig, tokenizer: &dyn CodeTokenizer) -> RepoResult {
    let attempt = || -> Result<MinedRepo> {
        let (repo, name) = open_or_clone(spec, &config.workdir)?;
        let enumeration = get_commits(&repo, config)?;
        let mut mined = MinedRepo::default();
        for raw in &enumeration.commits {
            let record = build_record(&repo, &name, raw, config)?;
            let decision = filter_commit(&record, config, tokenizer);
            match decision.rejected_by {
                Some(rule) => *mined.filter_tallies.entry(rule).or_insert(0) += 1,
                None if record.modifications.is_empty() => {
                    // Accepted by the rules but nothing extractable
                    // (binary-only or rename-only content).
                    *mined
                        .filter_tallies
                        .entry(RejectRule::NoQualifyingFiles)
                        .or_insert(0) += 1;
                }
                None => {
                    for m in &record.modifications {
                        *mined.per_language.entry(m.language).or_insert(0) += 1;
                    }
                    mined.records.push(record);
                }
            }
        }
        mined.enumeration = enumeration;
        Ok(mined)
    };
    match attempt() {
        Ok(mined) => RepoResult { mined, error: None },
        Err(e) => RepoResult {
            mined: MinedRepo::default(),
            error: Some(e.to_string()),
        },
    }
}

/// Mines every repository in the config, isolating per-repo failures.
pub fn mine(config: &MinerConfig, tokenizer: &(dyn CodeTokenizer + Sync)) -> Result<MiningOutcome> {
    config.validate()?;
    let repos = &config.repo_list;
    let mut outcome = MiningOutcome::default();
    outcome.report.repos_total = repos.len();
    if repos.is_empty() {
        return Ok(outcome);
    }

    let workers = config.clone_workers.clamp(1, repos.len());
    let cursor = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RepoResult>>> =
        Mutex::new((0..repos.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = cursor.fetch_add(1, Ordering::SeqCst);
                if idx >= repos.len() {
                    break;
                }
                let result = mine_one_repo(&repos[idx], config, tokenizer);
                results.lock().unwrap()[idx] = Some(result);
            });
        }
    });

    let results = results.into_inner().unwrap();
    for (spec, result) in repos.iter().zip(results) {
        let result = result.expect("worker filled every slot");
        match result.error {
            Some(error) => outcome.report.repos_failed.push(RepoFailure {
                repo: spec.clone(),
                error,
            }),
            None => outcome.report.repos_mined += 1,
        }
        let mined = result.mined;
        outcome.report.commits_examined += mined.enumeration.examined();
        outcome
            .report
            .tally_reject(RejectRule::MergeCommit, mined.enumeration.merge_commits);
        outcome.report.tally_reject(
            RejectRule::NoQualifyingFiles,
            mined.enumeration.no_qualifying_files,
        );
        outcome
            .report
            .tally_reject(RejectRule::R1RepoCap, mined.enumeration.over_cap);
        for (rule, n) in mined.filter_tallies {
            outcome.report.tally_reject(rule, n);
        }
        for (lang, n) in mined.per_language {
            *outcome
                .report
                .accepted_per_language
                .entry(lang)
                .or_insert(0) += n;
        }
        outcome.report.accepted += mined.records.len();
        outcome.records.extend(mined.records);
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::LexicalTokenizer;

    fn record(message_raw: &str, files_changed: usize) -> CommitRecord {
        CommitRecord {
            repo: "o/r".into(),
            hash: "deadbeef".into(),
            message_raw: message_raw.into(),
            message: normalize_message(message_raw),
            modifications: vec![CodeModification {
                file_path: "a.py".into(),
                language: Language::Python,
                added: vec!["x = 1".into()],
                deleted: vec![],
                all_lines: vec!["+x = 1".into()],
            }],
            files_changed,
        }
    }

    #[test]
    fn accepts_clean_whitelisted_message() {
        let config = MinerConfig::default();
        let decision = filter_commit(
            &record("Fix bug in exchange order", 1),
            &config,
            &LexicalTokenizer,
        );
        assert!(decision.accepted);
        assert_eq!(decision.rejected_by, None);
    }

    #[test]
    fn rejects_issue_number() {
        let config = MinerConfig::default();
        let decision = filter_commit(&record("Update docs (#1234)", 1), &config, &LexicalTokenizer);
        assert_eq!(decision.rejected_by, Some(RejectRule::R3IssueNumber));
        let decision = filter_commit(&record("Fix GH-77 regression", 1), &config, &LexicalTokenizer);
        assert_eq!(decision.rejected_by, Some(RejectRule::R3IssueNumber));
    }

    #[test]
    fn rejects_non_verb_start() {
        let config = MinerConfig::default();
        let decision = filter_commit(
            &record("the readme was updated", 1),
            &config,
            &LexicalTokenizer,
        );
        assert_eq!(decision.rejected_by, Some(RejectRule::R7NotVerbStart));
    }

    #[test]
    fn rejects_verb_outside_whitelist() {
        let config = MinerConfig::default();
        let decision = filter_commit(&record("refactor parser guts", 1), &config, &LexicalTokenizer);
        assert_eq!(decision.rejected_by, Some(RejectRule::R8VerbNotWhitelisted));
    }

    #[test]
    fn rejects_three_file_commit() {
        let config = MinerConfig::default();
        let decision = filter_commit(&record("fix it", 3), &config, &LexicalTokenizer);
        assert_eq!(decision.rejected_by, Some(RejectRule::R2FileCount));
    }

    #[test]
    fn rejects_non_english() {
        let config = MinerConfig::default();
        let decision = filter_commit(
            &record("수정: 한국어 커밋 메시지입니다", 1),
            &config,
            &LexicalTokenizer,
        );
        assert_eq!(decision.rejected_by, Some(RejectRule::R4NonEnglish));
    }

    #[test]
    fn rejects_overlong_code() {
        let config = MinerConfig::default();
        let mut r = record("fix tokenizer", 1);
        r.modifications[0].added = vec!["a b c d e f g h i j k l m n o p q r".into(); 2];
        let decision = filter_commit(&r, &config, &LexicalTokenizer);
        assert_eq!(decision.rejected_by, Some(RejectRule::R6TokenLength));
    }

    #[test]
    fn r6_counts_tokens_with_a_trained_vocabulary() {
        // Under the byte-fallback vocabulary every byte is one token, so a
        // 33-byte added line tokenizes to 33 > 32 and trips R6; a 32-byte
        // line stays within the limit.
        let vocab = crate::tokenizer::Vocabulary::from_merges(vec![]).unwrap();
        let config = MinerConfig::default();
        let mut r = record("fix overflow", 1);
        r.modifications[0].added = vec!["a".repeat(33)];
        r.modifications[0].deleted = vec![];
        let decision = filter_commit(&r, &config, &vocab);
        assert_eq!(decision.rejected_by, Some(RejectRule::R6TokenLength));
        r.modifications[0].added = vec!["a".repeat(32)];
        assert!(filter_commit(&r, &config, &vocab).accepted);
    }

    #[test]
    fn suffix_stripping_lemmas() {
        for (word, want) in [
            ("fixing", "fix"),
            ("Fixed", "fix"),
            ("added", "add"),
            ("updated", "update"),
            ("uses", "use"),
            ("using", "use"),
            ("upgraded", "upgrade"),
            ("removes", "remove"),
        ] {
            assert!(
                lemma_candidates(word).iter().any(|l| l == want),
                "{word} should lemmatize to {want}, got {:?}",
                lemma_candidates(word)
            );
        }
    }

    #[test]
    fn normalize_takes_first_line() {
        assert_eq!(normalize_message("Fix crash\n\nLong body here\n"), "Fix crash");
        assert_eq!(normalize_message("  padded  \n"), "padded");
        assert!(!normalize_message("a\nb").contains('\n'));
    }

    #[test]
    fn config_validation_catches_bad_values() {
        let zero_files = MinerConfig {
            max_files_changed: 0,
            ..MinerConfig::default()
        };
        assert!(zero_files.validate().is_err());
        let uppercase_verb = MinerConfig {
            verb_whitelist: vec!["Add".into()],
            ..MinerConfig::default()
        };
        assert!(uppercase_verb.validate().is_err());
        assert!(MinerConfig::default().validate().is_ok());
    }

    #[test]
    fn empty_repo_list_mines_nothing() {
        let config = MinerConfig::default();
        let outcome = mine(&config, &LexicalTokenizer).unwrap();
        assert!(outcome.records.is_empty());
        assert_eq!(outcome.report.commits_examined, 0);
        assert_eq!(outcome.report.accepted, 0);
        assert!(outcome.report.rejected.is_empty());
    }
}
