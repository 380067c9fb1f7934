//! Unified-diff parsing into structured added/deleted line sets.
//!
//! One parser serves both model encodings: hunks keep their context lines so
//! the all-modification input can be reconstructed, while the main pipeline
//! reads only the changed lines. Binary patches and pure renames carry no
//! hunks and are dropped by [`modifications_from_diff`].

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Marker of one hunk line, mapping 1:1 to the unidiff prefixes '+', '-', ' '.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LineKind {
    Added,
    Deleted,
    Context,
}

impl LineKind {
    pub fn marker(self) -> char {
        match self {
            LineKind::Added => '+',
            LineKind::Deleted => '-',
            LineKind::Context => ' ',
        }
    }
}

/// One `@@ -a,b +c,d @@` region of a unified diff.
///
/// Invariant (enforced at parse time): deleted + context line count equals
/// `old_count`, added + context equals `new_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffHunk {
    pub old_start: usize,
    pub old_count: usize,
    pub new_start: usize,
    pub new_count: usize,
    pub lines: Vec<(LineKind, String)>,
}

/// The six programming languages the corpus covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Python,
    Php,
    Go,
    Java,
    JavaScript,
    Ruby,
}

pub const ALL_LANGUAGES: [Language; 6] = [
    Language::Python,
    Language::Php,
    Language::Go,
    Language::Java,
    Language::JavaScript,
    Language::Ruby,
];

impl Language {
    pub fn from_extension(ext: &str) -> Option<Language> {
        match ext {
            "py" => Some(Language::Python),
            "php" => Some(Language::Php),
            "go" => Some(Language::Go),
            "java" => Some(Language::Java),
            "js" => Some(Language::JavaScript),
            "rb" => Some(Language::Ruby),
            _ => None,
        }
    }

    pub fn from_path(path: &str) -> Option<Language> {
        Path::new(path)
            .extension()
            .and_then(|e| e.to_str())
            .and_then(Language::from_extension)
    }

    pub fn extension(self) -> &'static str {
        match self {
            Language::Python => "py",
            Language::Php => "php",
            Language::Go => "go",
            Language::Java => "java",
            Language::JavaScript => "js",
            Language::Ruby => "rb",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Language::Python => "Python",
            Language::Php => "PHP",
            Language::Go => "Go",
            Language::Java => "Java",
            Language::JavaScript => "JavaScript",
            Language::Ruby => "Ruby",
        };
        f.write_str(name)
    }
}

/// The (added lines, deleted lines) pair for one file change. Context lines
/// never appear in `added`/`deleted`; `all_lines` keeps the full marked hunk
/// body for the all-modification input encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeModification {
    pub file_path: String,
    pub language: Language,
    pub added: Vec<String>,
    pub deleted: Vec<String>,
    pub all_lines: Vec<String>,
}

/// One mined commit before filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitRecord {
    pub repo: String,
    pub hash: String,
    /// Full message text as recorded in the commit.
    pub message_raw: String,
    /// Normalized first line; never contains a newline.
    pub message: String,
    pub modifications: Vec<CodeModification>,
    /// Number of files the commit touched, counted before any filtering.
    pub files_changed: usize,
}

fn parse_range(s: &str) -> Option<(usize, usize)> {
    match s.split_once(',') {
        Some((start, count)) => Some((start.parse().ok()?, count.parse().ok()?)),
        // `@@ -3 +7 @@` means a count of 1
        None => Some((s.parse().ok()?, 1)),
    }
}

fn parse_hunk_header(line: &str) -> Option<(usize, usize, usize, usize)> {
    let rest = line.strip_prefix("@@ -")?;
    let (old_part, rest) = rest.split_once(" +")?;
    let (new_part, _section) = rest.split_once(" @@")?;
    let (old_start, old_count) = parse_range(old_part)?;
    let (new_start, new_count) = parse_range(new_part)?;
    Some((old_start, old_count, new_start, new_count))
}

/// Parses one hunk starting at `lines[start]` (which must be a hunk header).
/// Returns the hunk and the index of the first line after it.
fn parse_one_hunk(lines: &[&str], start: usize) -> Result<(DiffHunk, usize)> {
    let header = lines[start];
    let (old_start, old_count, new_start, new_count) =
        parse_hunk_header(header).ok_or_else(|| Error::Parse {
            line: start + 1,
            msg: format!("malformed hunk header: {header:?}"),
        })?;

    let mut hunk = DiffHunk {
        old_start,
        old_count,
        new_start,
        new_count,
        lines: Vec::with_capacity(old_count + new_count),
    };

    let mut idx = start + 1;
    let (mut old_seen, mut new_seen) = (0usize, 0usize);
    while old_seen < old_count || new_seen < new_count {
        let Some(&line) = lines.get(idx) else {
            return Err(Error::Parse {
                line: idx,
                msg: format!(
                    "hunk at line {} ends before its declared counts (-{old_count} +{new_count})",
                    start + 1
                ),
            });
        };
        let (kind, text) = match line.chars().next() {
            // Some producers emit truly empty context lines instead of " ".
            None => (LineKind::Context, ""),
            Some('+') => (LineKind::Added, &line[1..]),
            Some('-') => (LineKind::Deleted, &line[1..]),
            Some(' ') => (LineKind::Context, &line[1..]),
            Some('\\') => {
                // "\ No newline at end of file": parsed and dropped.
                idx += 1;
                continue;
            }
            Some(c) => {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("unexpected diff marker {c:?} in {line:?}"),
                });
            }
        };
        match kind {
            LineKind::Added => new_seen += 1,
            LineKind::Deleted => old_seen += 1,
            LineKind::Context => {
                old_seen += 1;
                new_seen += 1;
            }
        }
        if old_seen > old_count || new_seen > new_count {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!(
                    "hunk at line {} is longer than its declared counts (-{old_count} +{new_count})",
                    start + 1
                ),
            });
        }
        hunk.lines.push((kind, text.to_string()));
        idx += 1;
    }
    // Trailing no-newline marker for the last line of the hunk.
    while matches!(lines.get(idx), Some(l) if l.starts_with('\\')) {
        idx += 1;
    }
    Ok((hunk, idx))
}

/// Parses a unified diff body for one file: hunk headers plus marked lines.
/// An optional leading `---`/`+++` file header pair is tolerated and skipped.
///
/// The empty string parses to an empty hunk list.
pub fn parse_unified_diff(text: &str) -> Result<Vec<DiffHunk>> {
    let lines: Vec<&str> = text.lines().collect();
    let mut idx = 0;
    while idx < lines.len() && (lines[idx].starts_with("--- ") || lines[idx].starts_with("+++ ")) {
        idx += 1;
    }
    let mut hunks = Vec::new();
    while idx < lines.len() {
        if lines[idx].is_empty() && idx + 1 == lines.len() {
            break;
        }
        let (hunk, next) = parse_one_hunk(&lines, idx)?;
        hunks.push(hunk);
        idx = next;
    }
    Ok(hunks)
}

/// Serializes hunks back to unified-diff text. Inverse of
/// [`parse_unified_diff`] on the marked-line region.
pub fn hunks_to_text(hunks: &[DiffHunk]) -> String {
    let mut out = String::new();
    for h in hunks {
        out.push_str(&format!(
            "@@ -{},{} +{},{} @@\n",
            h.old_start, h.old_count, h.new_start, h.new_count
        ));
        for (kind, text) in &h.lines {
            out.push(kind.marker());
            out.push_str(text);
            out.push('\n');
        }
    }
    out
}

/// Extracts the changed lines only, in document order: the model's main
/// input encoding. Context lines never appear in either list.
pub fn extract_changed_lines(hunks: &[DiffHunk]) -> (Vec<String>, Vec<String>) {
    let mut added = Vec::new();
    let mut deleted = Vec::new();
    for hunk in hunks {
        for (kind, text) in &hunk.lines {
            match kind {
                LineKind::Added => added.push(text.clone()),
                LineKind::Deleted => deleted.push(text.clone()),
                LineKind::Context => {}
            }
        }
    }
    (added, deleted)
}

/// Extracts every hunk line in document order with its marker retained as a
/// leading character, exactly as the raw diff shows it. This is the
/// all-modification input encoding used by the ablation harness.
pub fn extract_all_modification_lines(hunks: &[DiffHunk]) -> Vec<String> {
    let mut out = Vec::new();
    for hunk in hunks {
        for (kind, text) in &hunk.lines {
            out.push(format!("{}{}", kind.marker(), text));
        }
    }
    out
}

/// One file's portion of a (possibly multi-file) git diff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileDiff {
    pub old_path: Option<String>,
    pub new_path: Option<String>,
    pub is_binary: bool,
    pub is_rename: bool,
    pub hunks: Vec<DiffHunk>,
}

impl FileDiff {
    fn new() -> FileDiff {
        FileDiff {
            old_path: None,
            new_path: None,
            is_binary: false,
            is_rename: false,
            hunks: Vec::new(),
        }
    }

    /// Path the change should be attributed to (new side, falling back to
    /// the old side for deletions).
    pub fn path(&self) -> &str {
        self.new_path
            .as_deref()
            .or(self.old_path.as_deref())
            .unwrap_or("")
    }
}

fn parse_file_header_path(raw: &str) -> Option<String> {
    // Strip a trailing tab-separated timestamp, then the a/ or b/ prefix.
    let path = raw.split('\t').next().unwrap_or(raw).trim_end();
    if path == "/dev/null" {
        return None;
    }
    let path = path
        .strip_prefix("a/")
        .or_else(|| path.strip_prefix("b/"))
        .unwrap_or(path);
    Some(path.to_string())
}

fn is_extended_header(line: &str) -> bool {
    const PREFIXES: [&str; 10] = [
        "index ",
        "old mode ",
        "new mode ",
        "new file mode ",
        "deleted file mode ",
        "similarity index ",
        "dissimilarity index ",
        "copy from ",
        "copy to ",
        "mode ",
    ];
    PREFIXES.iter().any(|p| line.starts_with(p))
}

/// Parses a full git diff (one or more files, `diff --git` sections,
/// extended headers, binary markers, renames) into per-file structures.
pub fn parse_git_diff(text: &str) -> Result<Vec<FileDiff>> {
    let lines: Vec<&str> = text.lines().collect();
    let mut files: Vec<FileDiff> = Vec::new();
    let mut current: Option<FileDiff> = None;
    let mut idx = 0;

    while idx < lines.len() {
        let line = lines[idx];
        if let Some(rest) = line.strip_prefix("diff --git ") {
            if let Some(f) = current.take() {
                files.push(f);
            }
            let mut f = FileDiff::new();
            // Fallback paths from the header itself; --- / +++ lines override.
            if let Some((a, b)) = rest.split_once(" b/") {
                f.old_path = a.strip_prefix("a/").map(str::to_string);
                f.new_path = Some(b.to_string());
            }
            current = Some(f);
            idx += 1;
        } else if line.starts_with("Binary files ") && line.ends_with(" differ")
            || line == "GIT binary patch"
        {
            current.get_or_insert_with(FileDiff::new).is_binary = true;
            idx += 1;
        } else if let Some(rest) = line.strip_prefix("rename from ") {
            let f = current.get_or_insert_with(FileDiff::new);
            f.is_rename = true;
            f.old_path = Some(rest.to_string());
            idx += 1;
        } else if let Some(rest) = line.strip_prefix("rename to ") {
            let f = current.get_or_insert_with(FileDiff::new);
            f.is_rename = true;
            f.new_path = Some(rest.to_string());
            idx += 1;
        } else if let Some(rest) = line.strip_prefix("--- ") {
            current.get_or_insert_with(FileDiff::new).old_path = parse_file_header_path(rest);
            idx += 1;
        } else if let Some(rest) = line.strip_prefix("+++ ") {
            current.get_or_insert_with(FileDiff::new).new_path = parse_file_header_path(rest);
            idx += 1;
        } else if line.starts_with("@@ -") {
            let (hunk, next) = parse_one_hunk(&lines, idx)?;
            current.get_or_insert_with(FileDiff::new).hunks.push(hunk);
            idx = next;
        } else if is_extended_header(line) || line.is_empty() {
            idx += 1;
        } else if current.as_ref().is_some_and(|f| f.is_binary) {
            // Body of a binary patch; skip until the next file section.
            idx += 1;
        } else {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("unrecognized diff line: {line:?}"),
            });
        }
    }
    if let Some(f) = current.take() {
        files.push(f);
    }
    Ok(files)
}

/// Why a file in a diff produced no [`CodeModification`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    Binary,
    /// Pure rename or mode change: no added or deleted lines.
    NoContent,
    UnsupportedExtension,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub path: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default)]
pub struct DiffModifications {
    pub modifications: Vec<CodeModification>,
    pub skipped: Vec<SkippedFile>,
}

/// Turns a git diff into per-file modifications, dropping binary patches,
/// pure renames/mode changes, and files outside the six corpus languages.
pub fn modifications_from_diff(text: &str) -> Result<DiffModifications> {
    let files = parse_git_diff(text)?;
    let mut out = DiffModifications {
        modifications: Vec::new(),
        skipped: Vec::new(),
    };
    for file in files {
        let path = file.path().to_string();
        if file.is_binary {
            out.skipped.push(SkippedFile {
                path,
                reason: SkipReason::Binary,
            });
            continue;
        }
        let (added, deleted) = extract_changed_lines(&file.hunks);
        if added.is_empty() && deleted.is_empty() {
            out.skipped.push(SkippedFile {
                path,
                reason: SkipReason::NoContent,
            });
            continue;
        }
        match Language::from_path(&path) {
            Some(language) => out.modifications.push(CodeModification {
                file_path: path,
                language,
                added,
                deleted,
                all_lines: extract_all_modification_lines(&file.hunks),
            }),
            None => out.skipped.push(SkippedFile {
                path,
                reason: SkipReason::UnsupportedExtension,
            }),
        }
    }
    Ok(out)
}
