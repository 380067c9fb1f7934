//! Byte-level BPE tokenizer shared by the source (code) and target (message)
//! sides of the model.
//!
//! Symbols start from raw bytes, so encoding is total: any UTF-8 string round
//! trips exactly and no unk token is ever produced. Merges never cross the
//! boundary between whitespace and non-whitespace runs.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Number of reserved special ids at the bottom of the id space.
pub const NUM_SPECIALS: u32 = 6;
/// First byte symbol id; byte `b` has id `BYTE_BASE + b`.
pub const BYTE_BASE: u32 = NUM_SPECIALS;
/// Id of the first merge-produced token.
pub const FIRST_MERGE_ID: u32 = BYTE_BASE + 256;
/// Specials plus the 256 byte symbols: the smallest possible vocabulary.
pub const BASE_VOCAB_SIZE: usize = FIRST_MERGE_ID as usize;

pub const PAD_ID: u32 = 0;
pub const CLS_ID: u32 = 1;
pub const SEP_ID: u32 = 2;
pub const BOS_ID: u32 = 3;
pub const EOS_ID: u32 = 4;
pub const UNK_ID: u32 = 5;

const SPECIAL_NAMES: [&str; NUM_SPECIALS as usize] =
    ["[pad]", "[cls]", "[sep]", "[bos]", "[eos]", "[unk]"];

/// The model's special token ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecialTokens {
    pub pad_id: u32,
    pub cls_id: u32,
    pub sep_id: u32,
    pub bos_id: u32,
    pub eos_id: u32,
    pub unk_id: u32,
}

pub const SPECIALS: SpecialTokens = SpecialTokens {
    pad_id: PAD_ID,
    cls_id: CLS_ID,
    sep_id: SEP_ID,
    bos_id: BOS_ID,
    eos_id: EOS_ID,
    unk_id: UNK_ID,
};

/// A trained BPE vocabulary: the ordered merge list plus derived token maps.
/// Immutable after training; encode/decode are pure.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    merges: Vec<(u32, u32)>,
    /// Byte string for each merge-produced token, indexed by merge rank.
    merged_bytes: Vec<Vec<u8>>,
    merge_rank: HashMap<(u32, u32), u32>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from an ordered merge list.
    pub fn from_merges(merges: Vec<(u32, u32)>) -> Result<Vocabulary> {
        let mut vocab = Vocabulary {
            merges: Vec::with_capacity(merges.len()),
            merged_bytes: Vec::with_capacity(merges.len()),
            merge_rank: HashMap::with_capacity(merges.len()),
        };
        for (rank, (left, right)) in merges.into_iter().enumerate() {
            let limit = FIRST_MERGE_ID + rank as u32;
            for side in [left, right] {
                if side < BYTE_BASE || side >= limit {
                    return Err(Error::data(format!(
                        "merge {rank} references invalid symbol id {side}"
                    )));
                }
            }
            let mut bytes = vocab.symbol_bytes(left).to_vec();
            bytes.extend_from_slice(vocab.symbol_bytes(right));
            vocab.merge_rank.insert((left, right), rank as u32);
            vocab.merges.push((left, right));
            vocab.merged_bytes.push(bytes);
        }
        Ok(vocab)
    }

    pub fn merges(&self) -> &[(u32, u32)] {
        &self.merges
    }

    /// Total vocabulary size: specials + bytes + merges.
    pub fn size(&self) -> usize {
        BASE_VOCAB_SIZE + self.merges.len()
    }

    pub fn specials(&self) -> SpecialTokens {
        SPECIALS
    }

    pub fn is_special(&self, id: u32) -> bool {
        id < NUM_SPECIALS
    }

    /// The byte string of a non-special token id. Panics on specials or
    /// out-of-range ids; use [`Vocabulary::token_bytes`] for fallible access.
    fn symbol_bytes(&self, id: u32) -> &[u8] {
        self.token_bytes(id)
            .expect("symbol id out of range or special")
    }

    /// Byte string for a token id; `None` for specials and out-of-range ids.
    pub fn token_bytes(&self, id: u32) -> Option<&[u8]> {
        if id < BYTE_BASE {
            return None;
        }
        if id < FIRST_MERGE_ID {
            let b = (id - BYTE_BASE) as usize;
            Some(&BYTE_TABLE[b..=b])
        } else {
            self.merged_bytes.get((id - FIRST_MERGE_ID) as usize).map(Vec::as_slice)
        }
    }

    /// Id for an exact token byte string, if it is in the vocabulary.
    pub fn token_id(&self, bytes: &[u8]) -> Option<u32> {
        match bytes.len() {
            0 => None,
            1 => Some(BYTE_BASE + bytes[0] as u32),
            _ => self
                .merged_bytes
                .iter()
                .position(|b| b == bytes)
                .map(|rank| FIRST_MERGE_ID + rank as u32),
        }
    }

    /// Human-readable display form of any id (specials by name, others
    /// escaped).
    pub fn token_display(&self, id: u32) -> String {
        if id < NUM_SPECIALS {
            SPECIAL_NAMES[id as usize].to_string()
        } else {
            match self.token_bytes(id) {
                Some(bytes) => escape_bytes(bytes),
                None => format!("<invalid:{id}>"),
            }
        }
    }

    /// Encodes text into token ids. Never produces specials or unk.
    pub fn encode(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        for segment in segments(text) {
            self.encode_segment(segment, &mut out);
        }
        out
    }

    fn encode_segment(&self, segment: &str, out: &mut Vec<u32>) {
        let mut syms: Vec<u32> = segment.bytes().map(|b| BYTE_BASE + b as u32).collect();
        loop {
            let mut best: Option<(u32, (u32, u32))> = None;
            for pair in syms.windows(2) {
                let key = (pair[0], pair[1]);
                if let Some(&rank) = self.merge_rank.get(&key) {
                    if best.is_none_or(|(r, _)| rank < r) {
                        best = Some((rank, key));
                    }
                }
            }
            let Some((rank, (left, right))) = best else { break };
            let new_id = FIRST_MERGE_ID + rank;
            let mut merged = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == left && syms[i + 1] == right {
                    merged.push(new_id);
                    i += 2;
                } else {
                    merged.push(syms[i]);
                    i += 1;
                }
            }
            syms = merged;
        }
        out.extend_from_slice(&syms);
    }

    /// Decodes ids back to text. Specials are stripped; out-of-range ids are
    /// an error. Byte runs that do not form valid UTF-8 (possible for
    /// model-generated sequences) decode lossily.
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let mut bytes = Vec::new();
        for &id in ids {
            if id < NUM_SPECIALS {
                continue;
            }
            match self.token_bytes(id) {
                Some(b) => bytes.extend_from_slice(b),
                None => {
                    return Err(Error::data(format!(
                        "token id {id} out of range for vocabulary of size {}",
                        self.size()
                    )));
                }
            }
        }
        Ok(String::from_utf8_lossy(&bytes).into_owned())
    }

    /// Stable hash of the merge list; binds checkpoints to the vocabulary
    /// they were trained with.
    pub fn hash(&self) -> u64 {
        let mut h = Fnv64::new();
        h.update(&(self.merges.len() as u64).to_le_bytes());
        for &(l, r) in &self.merges {
            h.update(&l.to_le_bytes());
            h.update(&r.to_le_bytes());
        }
        h.finish()
    }

    /// Writes `merges.txt` and `vocab.txt` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut merges_out = String::new();
        for &(l, r) in &self.merges {
            merges_out.push_str(&self.token_display(l));
            merges_out.push(' ');
            merges_out.push_str(&self.token_display(r));
            merges_out.push('\n');
        }
        fs::write(dir.join("merges.txt"), merges_out)?;

        let mut vocab_out = String::new();
        for id in 0..self.size() as u32 {
            let _ = writeln!(vocab_out, "{}\t{}", id, self.token_display(id));
        }
        fs::write(dir.join("vocab.txt"), vocab_out)?;
        Ok(())
    }

    /// Loads a vocabulary saved by [`Vocabulary::save`], checking the token
    /// table against the merge list.
    pub fn load(dir: &Path) -> Result<Vocabulary> {
        let merges_text = fs::read_to_string(dir.join("merges.txt"))?;
        let mut merges = Vec::new();
        let mut by_bytes: HashMap<Vec<u8>, u32> = HashMap::new();
        for (no, line) in merges_text.lines().enumerate() {
            let (l, r) = line.split_once(' ').ok_or_else(|| Error::Parse {
                line: no + 1,
                msg: format!("merge line without separator: {line:?}"),
            })?;
            let left = resolve_token(&unescape_bytes(l, no + 1)?, &by_bytes, no + 1)?;
            let right = resolve_token(&unescape_bytes(r, no + 1)?, &by_bytes, no + 1)?;
            let mut bytes = token_bytes_of(left, &merges, no + 1)?;
            bytes.extend(token_bytes_of(right, &merges, no + 1)?);
            by_bytes.insert(bytes.clone(), FIRST_MERGE_ID + merges.len() as u32);
            merges.push((left, right));
        }
        let vocab = Vocabulary::from_merges(merges)?;

        let vocab_text = fs::read_to_string(dir.join("vocab.txt"))?;
        let mut entries = 0usize;
        for (no, line) in vocab_text.lines().enumerate() {
            let (id, tok) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: no + 1,
                msg: "vocab line without tab separator".into(),
            })?;
            let id: u32 = id.parse().map_err(|_| Error::Parse {
                line: no + 1,
                msg: format!("bad token id {id:?}"),
            })?;
            if vocab.token_display(id) != tok {
                return Err(Error::Parse {
                    line: no + 1,
                    msg: format!("vocab entry {id} disagrees with merge list"),
                });
            }
            entries += 1;
        }
        if entries != vocab.size() {
            return Err(Error::data(format!(
                "vocab.txt has {entries} entries, merges imply {}",
                vocab.size()
            )));
        }
        Ok(vocab)
    }
}

fn resolve_token(bytes: &[u8], by_bytes: &HashMap<Vec<u8>, u32>, line: usize) -> Result<u32> {
    if bytes.len() == 1 {
        return Ok(BYTE_BASE + bytes[0] as u32);
    }
    by_bytes.get(bytes).copied().ok_or_else(|| Error::Parse {
        line,
        msg: format!("merge references unknown token {:?}", escape_bytes(bytes)),
    })
}

fn token_bytes_of(id: u32, merges: &[(u32, u32)], line: usize) -> Result<Vec<u8>> {
    if (BYTE_BASE..FIRST_MERGE_ID).contains(&id) {
        return Ok(vec![(id - BYTE_BASE) as u8]);
    }
    let rank = (id - FIRST_MERGE_ID) as usize;
    let &(l, r) = merges.get(rank).ok_or_else(|| Error::Parse {
        line,
        msg: format!("forward reference to merge {rank}"),
    })?;
    let mut bytes = token_bytes_of(l, merges, line)?;
    bytes.extend(token_bytes_of(r, merges, line)?);
    Ok(bytes)
}

static BYTE_TABLE: [u8; 256] = {
    let mut t = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        t[i] = i as u8;
        i += 1;
    }
    t
};

/// Splits text into maximal all-whitespace / all-non-whitespace runs.
/// Concatenating the runs reproduces the text; merges never cross runs.
fn segments(text: &str) -> impl Iterator<Item = &str> {
    let mut rest = text;
    std::iter::from_fn(move || {
        if rest.is_empty() {
            return None;
        }
        let first_ws = rest.chars().next().unwrap().is_whitespace();
        let end = rest
            .char_indices()
            .find(|(_, c)| c.is_whitespace() != first_ws)
            .map_or(rest.len(), |(i, _)| i);
        let (seg, tail) = rest.split_at(end);
        rest = tail;
        Some(seg)
    })
}

fn escape_bytes(bytes: &[u8]) -> String {
    let mut out = String::new();
    for &b in bytes {
        if b.is_ascii_graphic() && b != b'\\' {
            out.push(b as char);
        } else {
            let _ = write!(out, "\\x{b:02x}");
        }
    }
    out
}

fn unescape_bytes(s: &str, line: usize) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            let mut buf = [0u8; 4];
            out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
            continue;
        }
        let err = || Error::Parse {
            line,
            msg: format!("bad escape in token {s:?}"),
        };
        if chars.next() != Some('x') {
            return Err(err());
        }
        let hi = chars.next().and_then(|c| c.to_digit(16)).ok_or_else(err)?;
        let lo = chars.next().and_then(|c| c.to_digit(16)).ok_or_else(err)?;
        out.push((hi * 16 + lo) as u8);
    }
    Ok(out)
}

/// Trains a byte-level BPE vocabulary with greedy most-frequent-pair merges.
///
/// `vocab_size` counts specials and the 256 byte symbols; training stops
/// early if no adjacent pair occurs at least twice.
pub fn train_bpe<I, S>(texts: I, vocab_size: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if vocab_size < BASE_VOCAB_SIZE {
        return Err(Error::data(format!(
            "vocab_size {vocab_size} is below the {BASE_VOCAB_SIZE} base symbols"
        )));
    }
    let mut seg_counts: HashMap<String, u64> = HashMap::new();
    let mut saw_text = false;
    for text in texts {
        saw_text = true;
        for seg in segments(text.as_ref()) {
            *seg_counts.entry(seg.to_string()).or_insert(0) += 1;
        }
    }
    if !saw_text {
        return Err(Error::data("cannot train a vocabulary on an empty stream"));
    }

    let mut trainer = Trainer::new(seg_counts);
    let mut merges = Vec::new();
    let target = vocab_size - BASE_VOCAB_SIZE;
    while merges.len() < target {
        let Some(pair) = trainer.best_pair() else {
            break;
        };
        let new_id = FIRST_MERGE_ID + merges.len() as u32;
        trainer.apply_merge(pair, new_id);
        merges.push(pair);
    }
    Vocabulary::from_merges(merges)
}

struct Trainer {
    words: Vec<(Vec<u32>, u64)>,
    pair_counts: HashMap<(u32, u32), i64>,
    /// Word indices that contained the pair when last touched; may be stale.
    pair_words: HashMap<(u32, u32), BTreeSet<usize>>,
}

impl Trainer {
    fn new(seg_counts: HashMap<String, u64>) -> Trainer {
        let words: Vec<(Vec<u32>, u64)> = seg_counts
            .into_iter()
            .map(|(seg, count)| {
                let syms = seg.bytes().map(|b| BYTE_BASE + b as u32).collect();
                (syms, count)
            })
            .collect();
        let mut trainer = Trainer {
            words,
            pair_counts: HashMap::new(),
            pair_words: HashMap::new(),
        };
        for w in 0..trainer.words.len() {
            trainer.add_word_pairs(w);
        }
        trainer
    }

    fn add_word_pairs(&mut self, w: usize) {
        let (syms, count) = &self.words[w];
        let count = *count as i64;
        for pair in syms.windows(2) {
            let key = (pair[0], pair[1]);
            *self.pair_counts.entry(key).or_insert(0) += count;
            self.pair_words.entry(key).or_default().insert(w);
        }
    }

    fn remove_word_pairs(&mut self, w: usize) {
        let (syms, count) = &self.words[w];
        let count = *count as i64;
        let mut touched = Vec::with_capacity(syms.len().saturating_sub(1));
        for pair in syms.windows(2) {
            touched.push((pair[0], pair[1]));
        }
        for key in touched {
            *self.pair_counts.entry(key).or_insert(0) -= count;
        }
    }

    /// Most frequent pair with count >= 2; ties break toward the smaller
    /// (left, right) ids so training is deterministic.
    fn best_pair(&self) -> Option<(u32, u32)> {
        let mut best: Option<((u32, u32), i64)> = None;
        for (&pair, &count) in &self.pair_counts {
            if count < 2 {
                continue;
            }
            let better = match best {
                None => true,
                Some((bp, bc)) => count > bc || (count == bc && pair < bp),
            };
            if better {
                best = Some((pair, count));
            }
        }
        best.map(|(pair, _)| pair)
    }

    fn apply_merge(&mut self, pair: (u32, u32), new_id: u32) {
        let affected: Vec<usize> = self
            .pair_words
            .remove(&pair)
            .map(|set| set.into_iter().collect())
            .unwrap_or_default();
        for w in affected {
            let contains = self.words[w]
                .0
                .windows(2)
                .any(|p| (p[0], p[1]) == pair);
            if !contains {
                continue; // stale index entry
            }
            self.remove_word_pairs(w);
            let syms = &mut self.words[w].0;
            let mut merged = Vec::with_capacity(syms.len());
            let mut i = 0;
            while i < syms.len() {
                if i + 1 < syms.len() && syms[i] == pair.0 && syms[i + 1] == pair.1 {
                    merged.push(new_id);
                    i += 2;
                } else {
                    merged.push(syms[i]);
                    i += 1;
                }
            }
            *syms = merged;
            self.add_word_pairs(w);
        }
        self.pair_counts.remove(&pair);
    }
}

/// Counts code tokens for the miner's length rule. The default
/// [`LexicalTokenizer`] approximates a code lexer; a trained [`Vocabulary`]
/// can be used instead once one exists.
pub trait CodeTokenizer {
    fn token_count(&self, text: &str) -> usize;
}

impl CodeTokenizer for Vocabulary {
    fn token_count(&self, text: &str) -> usize {
        self.encode(text).len()
    }
}

/// Splits code into identifier/number runs and single punctuation tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalTokenizer;

impl CodeTokenizer for LexicalTokenizer {
    fn token_count(&self, text: &str) -> usize {
        let mut count = 0;
        let mut in_word = false;
        for c in text.chars() {
            if c.is_whitespace() {
                in_word = false;
            } else if c.is_alphanumeric() || c == '_' {
                if !in_word {
                    count += 1;
                    in_word = true;
                }
            } else {
                count += 1;
                in_word = false;
            }
        }
        count
    }
}

struct Fnv64(u64);

impl Fnv64 {
    fn new() -> Fnv64 {
        Fnv64(0xcbf29ce484222325)
    }

    fn update(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

/// FNV-1a over a byte string; used for stable corpus ids and vocab hashes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = Fnv64::new();
    h.update(bytes);
    h.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_merge_on_aaab_corpus_is_aa() {
        // "aaab aaab": position pairs (a,a) x4, (a,b) x2, so (a,a) merges
        // first; the tie between (aa,a) and (a,b) at count 2 breaks toward
        // the smaller pair ids, so (a,b) merges second.
        let vocab = train_bpe(["aaab aaab"], BASE_VOCAB_SIZE + 2).unwrap();
        let a = BYTE_BASE + b'a' as u32;
        let b = BYTE_BASE + b'b' as u32;
        assert_eq!(vocab.merges(), &[(a, a), (a, b)]);
        assert_eq!(vocab.size(), BASE_VOCAB_SIZE + 2);
    }

    #[test]
    fn minimum_vocab_size_means_byte_fallback() {
        let vocab = train_bpe(["whatever text"], BASE_VOCAB_SIZE).unwrap();
        assert!(vocab.merges().is_empty());
        let ids = vocab.encode("hi");
        assert_eq!(ids, vec![BYTE_BASE + b'h' as u32, BYTE_BASE + b'i' as u32]);
    }

    #[test]
    fn undersized_vocab_is_an_error() {
        assert!(train_bpe(["x"], BASE_VOCAB_SIZE - 1).is_err());
    }

    #[test]
    fn empty_stream_is_an_error() {
        let texts: [&str; 0] = [];
        assert!(train_bpe(texts, BASE_VOCAB_SIZE + 10).is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        let vocab = train_bpe(["return a - b", "return a + b"], BASE_VOCAB_SIZE + 8).unwrap();
        for s in [
            "",
            "return a - b",
            "Fix bug",
            "naïve → düz",
            "tabs\tand\nnewlines",
            "\u{0}control\u{7}bytes",
        ] {
            let ids = vocab.encode(s);
            assert_eq!(vocab.decode(&ids).unwrap(), s, "round trip failed for {s:?}");
        }
    }

    #[test]
    fn encode_empty_is_empty() {
        let vocab = Vocabulary::from_merges(vec![]).unwrap();
        assert!(vocab.encode("").is_empty());
        assert_eq!(vocab.decode(&[]).unwrap(), "");
    }

    #[test]
    fn decode_strips_specials() {
        let vocab = Vocabulary::from_merges(vec![]).unwrap();
        let mut ids = vec![BOS_ID];
        ids.extend(vocab.encode("Fix bug"));
        ids.push(EOS_ID);
        ids.push(PAD_ID);
        assert_eq!(vocab.decode(&ids).unwrap(), "Fix bug");
    }

    #[test]
    fn decode_rejects_out_of_range() {
        let vocab = Vocabulary::from_merges(vec![]).unwrap();
        assert!(vocab.decode(&[FIRST_MERGE_ID]).is_err());
    }

    #[test]
    fn merges_shorten_monotonically() {
        let corpus = ["def add(a, b): return a + b", "def sub(a, b): return a - b"];
        let vocab = train_bpe(corpus, BASE_VOCAB_SIZE + 24).unwrap();
        let text = corpus[0];
        let mut prev_len = usize::MAX;
        for k in 0..=vocab.merges().len() {
            let partial = Vocabulary::from_merges(vocab.merges()[..k].to_vec()).unwrap();
            let len = partial.encode(text).len();
            assert!(len <= prev_len, "encoding lengthened at merge {k}");
            prev_len = len;
        }
    }

    #[test]
    fn training_is_deterministic() {
        let corpus = ["update docs for parser", "update parser for docs"];
        let a = train_bpe(corpus, BASE_VOCAB_SIZE + 16).unwrap();
        let b = train_bpe(corpus, BASE_VOCAB_SIZE + 16).unwrap();
        assert_eq!(a.merges(), b.merges());
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = train_bpe(
            ["fix flaky test in ci", "fix flaky build in ci", "tab\ttoken"],
            BASE_VOCAB_SIZE + 12,
        )
        .unwrap();
        vocab.save(dir.path()).unwrap();
        let loaded = Vocabulary::load(dir.path()).unwrap();
        assert_eq!(loaded, vocab);
        assert_eq!(loaded.hash(), vocab.hash());
    }

    #[test]
    fn token_maps_are_mutual_inverses() {
        let vocab = train_bpe(["abcabc abcabc"], BASE_VOCAB_SIZE + 4).unwrap();
        for id in BYTE_BASE..vocab.size() as u32 {
            let bytes = vocab.token_bytes(id).unwrap().to_vec();
            assert_eq!(vocab.token_id(&bytes), Some(id));
        }
    }

    #[test]
    fn encode_never_emits_special_ids() {
        let vocab = train_bpe(["misc text with [cls] markers [sep]"], BASE_VOCAB_SIZE + 8).unwrap();
        for s in ["[cls]", "[sep] [pad]", "plain", ""] {
            assert!(vocab.encode(s).iter().all(|&id| id >= BYTE_BASE));
        }
    }

    #[test]
    fn lexical_tokenizer_counts_identifiers_and_punctuation() {
        let t = LexicalTokenizer;
        assert_eq!(t.token_count("return a + b"), 4);
        assert_eq!(t.token_count("foo(bar, baz_2)"), 6);
        assert_eq!(t.token_count(""), 0);
        assert_eq!(t.token_count("   "), 0);
    }
}
