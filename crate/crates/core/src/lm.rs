//! The two probability models behind candidate ranking.
//!
//! [`UnigramVocab`] holds subword tokens with natural-log probabilities and
//! estimates how likely a letter string is to be deliberate text.
//! [`BaselineDistribution`] holds per-character log-probabilities of
//! line-initial letters and estimates how likely the same string is to arise
//! by chance. The ratio of the two (in log space) is the rank computed by
//! [`crate::scorer`].

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use smallvec::SmallVec;
use thiserror::Error;

use crate::ingest::InitialLetterSequence;
use crate::profile::LanguageProfile;

/// Penalty factor for characters with no single-character vocabulary token:
/// the fallback token is priced 100x below the cheapest real token.
const FALLBACK_PENALTY: f64 = 100.0;

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("vocab file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("vocab line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no usable vocabulary tokens after filtering ({dropped} dropped)")]
    Empty { dropped: u64 },
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("baseline file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("baseline line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("baseline character {0:?} is not in the alphabet")]
    OutsideAlphabet(char),
    #[error("baseline has non-positive total weight")]
    NonPositiveTotal,
    #[error("cannot estimate a baseline from an empty corpus")]
    EmptyCorpus,
}

/// Counters from vocabulary loading.
#[derive(Debug, Clone, Copy, Default)]
pub struct VocabLoadStats {
    pub kept: u64,
    /// Tokens containing a character outside the alphabet.
    pub dropped_non_alphabet: u64,
    /// Meta tokens: first character is not a letter of the alphabet
    /// (e.g. `<unk>` or marker-prefixed entries).
    pub dropped_meta: u64,
}

/// One token's worth of lattice edge: `len` characters consumed for
/// `log_prob` nats.
pub(crate) type TokenMatch = (u8, f64);
pub(crate) type TokenMatches = SmallVec<[TokenMatch; 8]>;

#[derive(Debug, Clone, Default)]
struct TrieNode {
    // Sorted by char; binary-searched on lookup.
    children: Vec<(char, u32)>,
    log_prob: Option<f64>,
}

#[derive(Debug, Clone)]
struct TokenTrie {
    nodes: Vec<TrieNode>,
}

impl TokenTrie {
    fn build<'a>(entries: impl Iterator<Item = (&'a str, f64)>) -> Self {
        let mut nodes = vec![TrieNode::default()];
        for (token, lp) in entries {
            let mut node = 0usize;
            for c in token.chars() {
                node = match nodes[node].children.binary_search_by_key(&c, |&(ch, _)| ch) {
                    Ok(i) => nodes[node].children[i].1 as usize,
                    Err(i) => {
                        let next = nodes.len() as u32;
                        nodes[node].children.insert(i, (c, next));
                        nodes.push(TrieNode::default());
                        next as usize
                    }
                };
            }
            nodes[node].log_prob = Some(lp);
        }
        TokenTrie { nodes }
    }

    /// Visit every token that is a prefix of `letters[pos..]`, at most
    /// `max_len` characters long.
    fn walk(&self, letters: &[char], pos: usize, max_len: usize, mut visit: impl FnMut(u8, f64)) {
        let mut node = 0usize;
        let end = letters.len().min(pos + max_len);
        for (i, &c) in letters[pos..end].iter().enumerate() {
            match self.nodes[node].children.binary_search_by_key(&c, |&(ch, _)| ch) {
                Ok(j) => node = self.nodes[node].children[j].1 as usize,
                Err(_) => return,
            }
            if let Some(lp) = self.nodes[node].log_prob {
                visit((i + 1) as u8, lp);
            }
        }
    }
}

/// A unigram subword vocabulary: tokens over the alphabet with natural-log
/// probabilities (all finite, all <= 0).
///
/// Every alphabet character is guaranteed coverable: characters lacking a
/// single-character token are scored with a fallback priced well below the
/// cheapest real token, so every letter string has at least one tokenization.
#[derive(Debug, Clone)]
pub struct UnigramVocab {
    entries: HashMap<String, f64>,
    trie: TokenTrie,
    max_token_len: usize,
    fallback_log_prob: f64,
    /// Single-character token scores, fallback included, for every alphabet
    /// character. Keyed lookup happens once per scanned letter.
    single_char: HashMap<char, f64>,
    coverage: f64,
    stats: VocabLoadStats,
}

impl UnigramVocab {
    /// Load a `token<TAB>log_prob` file.
    pub fn load(path: impl AsRef<Path>, profile: &LanguageProfile) -> Result<Self, VocabError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| VocabError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(BufReader::new(file), profile)
    }

    /// Parse vocabulary lines from a reader. Tokens with characters outside
    /// the alphabet and meta tokens (first character not in the alphabet)
    /// are dropped and counted; a malformed line is an error.
    pub fn parse(reader: impl BufRead, profile: &LanguageProfile) -> Result<Self, VocabError> {
        let mut rows: Vec<(String, f64)> = Vec::new();
        let mut stats = VocabLoadStats::default();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|source| VocabError::Io {
                path: format!("<line {lineno}>"),
                source,
            })?;
            if line.is_empty() {
                continue;
            }
            let (token, lp) = line.split_once('\t').ok_or_else(|| VocabError::Parse {
                line: lineno,
                message: "expected token<TAB>log_prob".to_string(),
            })?;
            if token.is_empty() {
                return Err(VocabError::Parse {
                    line: lineno,
                    message: "empty token".to_string(),
                });
            }
            let lp: f64 = lp.trim().parse().map_err(|_| VocabError::Parse {
                line: lineno,
                message: format!("invalid log_prob {lp:?}"),
            })?;
            if !lp.is_finite() || lp > 0.0 {
                return Err(VocabError::Parse {
                    line: lineno,
                    message: format!("log_prob must be finite and <= 0, got {lp}"),
                });
            }
            let mut chars = token.chars();
            let first = chars.next().expect("token is non-empty");
            if !profile.contains(first) {
                stats.dropped_meta += 1;
                continue;
            }
            if !chars.all(|c| profile.contains(c)) {
                stats.dropped_non_alphabet += 1;
                continue;
            }
            rows.push((token.to_string(), lp));
        }
        Self::from_rows(rows, stats, profile)
    }

    /// Build a vocabulary from in-memory entries. Entries must already be
    /// over the alphabet; log-probs must be finite and <= 0.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (String, f64)>,
        profile: &LanguageProfile,
    ) -> Result<Self, VocabError> {
        let mut rows = Vec::new();
        let mut stats = VocabLoadStats::default();
        for (lineno, (token, lp)) in entries.into_iter().enumerate() {
            if token.is_empty() || !lp.is_finite() || lp > 0.0 {
                return Err(VocabError::Parse {
                    line: lineno + 1,
                    message: format!("invalid entry {token:?} -> {lp}"),
                });
            }
            let mut chars = token.chars();
            if !profile.contains(chars.next().expect("non-empty")) {
                stats.dropped_meta += 1;
                continue;
            }
            if !chars.all(|c| profile.contains(c)) {
                stats.dropped_non_alphabet += 1;
                continue;
            }
            rows.push((token, lp));
        }
        Self::from_rows(rows, stats, profile)
    }

    fn from_rows(
        rows: Vec<(String, f64)>,
        mut stats: VocabLoadStats,
        profile: &LanguageProfile,
    ) -> Result<Self, VocabError> {
        if rows.is_empty() {
            return Err(VocabError::Empty {
                dropped: stats.dropped_meta + stats.dropped_non_alphabet,
            });
        }
        let mut entries = HashMap::with_capacity(rows.len());
        let mut max_token_len = 0usize;
        let mut min_log_prob = 0f64;
        for (token, lp) in rows {
            max_token_len = max_token_len.max(token.chars().count());
            min_log_prob = min_log_prob.min(lp);
            // Duplicate tokens: keep the higher-probability reading.
            entries
                .entry(token)
                .and_modify(|cur: &mut f64| *cur = cur.max(lp))
                .or_insert(lp);
        }
        stats.kept = entries.len() as u64;
        let fallback_log_prob = min_log_prob - FALLBACK_PENALTY.ln();

        let mut sorted: Vec<(&str, f64)> = entries.iter().map(|(t, &lp)| (t.as_str(), lp)).collect();
        sorted.sort_unstable_by(|a, b| a.0.cmp(b.0));
        let trie = TokenTrie::build(sorted.into_iter());

        let mut single_char = HashMap::new();
        let mut covered = 0usize;
        for c in profile.alphabet() {
            let mut buf = [0u8; 4];
            if let Some(&lp) = entries.get(c.encode_utf8(&mut buf) as &str) {
                single_char.insert(c, lp);
                covered += 1;
            } else {
                single_char.insert(c, fallback_log_prob);
            }
        }
        let coverage = covered as f64 / profile.alphabet_len() as f64;

        Ok(UnigramVocab {
            entries,
            trie,
            max_token_len,
            fallback_log_prob,
            single_char,
            coverage,
            stats,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_token_len(&self) -> usize {
        self.max_token_len
    }

    /// Fraction of alphabet characters that appear as single-character
    /// tokens in the vocabulary proper (excluding fallbacks).
    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn stats(&self) -> VocabLoadStats {
        self.stats
    }

    pub fn log_prob(&self, token: &str) -> Option<f64> {
        self.entries.get(token).copied()
    }

    pub fn fallback_log_prob(&self) -> f64 {
        self.fallback_log_prob
    }

    /// Score of `c` as a standalone piece: its single-character token if the
    /// vocabulary has one, the fallback otherwise. `None` when `c` is not an
    /// alphabet character.
    pub fn single_char_log_prob(&self, c: char) -> Option<f64> {
        self.single_char.get(&c).copied()
    }

    /// All tokens matching at `letters[pos..]`, capped at `max_len`
    /// characters. Always yields at least the single-character piece for an
    /// alphabet character.
    pub(crate) fn matches_at(&self, letters: &[char], pos: usize, max_len: usize) -> TokenMatches {
        let mut out = TokenMatches::new();
        self.trie
            .walk(letters, pos, max_len.min(self.max_token_len), |len, lp| {
                out.push((len, lp))
            });
        let has_single = out.first().is_some_and(|&(len, _)| len == 1);
        if !has_single {
            if let Some(&lp) = self.single_char.get(&letters[pos]) {
                out.insert(0, (1, lp));
            }
        }
        out
    }
}

/// Per-character log-probabilities of line-initial letters under the
/// no-acrostic hypothesis. Probabilities sum to 1 over the alphabet.
#[derive(Debug, Clone)]
pub struct BaselineDistribution {
    log_p0: HashMap<char, f64>,
    smoothing_floor: f64,
}

impl BaselineDistribution {
    /// Estimate from the corpus's own initial letters with add-one smoothing
    /// over the alphabet: `p0(c) = (count(c)+1) / (N + |alphabet|)`.
    pub fn estimate<'a>(
        sequences: impl IntoIterator<Item = &'a InitialLetterSequence>,
        profile: &LanguageProfile,
    ) -> Result<Self, BaselineError> {
        let mut counts: HashMap<char, f64> = HashMap::new();
        let mut total = 0u64;
        for seq in sequences {
            for &c in seq.letters() {
                *counts.entry(c).or_insert(0.0) += 1.0;
                total += 1;
            }
        }
        if total == 0 {
            return Err(BaselineError::EmptyCorpus);
        }
        Self::from_weights(&counts, profile)
    }

    /// Load a `char<TAB>weight` file (counts or probabilities; any
    /// non-negative weights). Characters outside the alphabet are an error.
    pub fn load(path: impl AsRef<Path>, profile: &LanguageProfile) -> Result<Self, BaselineError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| BaselineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(BufReader::new(file), profile)
    }

    pub fn parse(reader: impl BufRead, profile: &LanguageProfile) -> Result<Self, BaselineError> {
        let mut weights: HashMap<char, f64> = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|source| BaselineError::Io {
                path: format!("<line {lineno}>"),
                source,
            })?;
            if line.is_empty() {
                continue;
            }
            let (c, w) = line.split_once('\t').ok_or_else(|| BaselineError::Parse {
                line: lineno,
                message: "expected char<TAB>weight".to_string(),
            })?;
            let mut chars = c.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(BaselineError::Parse {
                    line: lineno,
                    message: "key must be a single character".to_string(),
                });
            };
            if !profile.contains(c) {
                return Err(BaselineError::OutsideAlphabet(c));
            }
            let w: f64 = w.trim().parse().map_err(|_| BaselineError::Parse {
                line: lineno,
                message: format!("invalid weight {w:?}"),
            })?;
            if !w.is_finite() || w < 0.0 {
                return Err(BaselineError::Parse {
                    line: lineno,
                    message: format!("weight must be finite and >= 0, got {w}"),
                });
            }
            if weights.insert(c, w).is_some() {
                return Err(BaselineError::Parse {
                    line: lineno,
                    message: format!("duplicate character {c:?}"),
                });
            }
        }
        if weights.values().sum::<f64>() <= 0.0 {
            return Err(BaselineError::NonPositiveTotal);
        }
        Self::from_weights(&weights, profile)
    }

    /// Uniform distribution over the alphabet.
    pub fn uniform(profile: &LanguageProfile) -> Self {
        let lp = -(profile.alphabet_len() as f64).ln();
        BaselineDistribution {
            log_p0: profile.alphabet().map(|c| (c, lp)).collect(),
            smoothing_floor: lp,
        }
    }

    fn from_weights(
        weights: &HashMap<char, f64>,
        profile: &LanguageProfile,
    ) -> Result<Self, BaselineError> {
        let total: f64 = weights.values().sum();
        let denom = total + profile.alphabet_len() as f64;
        let smoothing_floor = (1.0 / denom).ln();
        let log_p0 = profile
            .alphabet()
            .map(|c| {
                let w = weights.get(&c).copied().unwrap_or(0.0);
                (c, ((w + 1.0) / denom).ln())
            })
            .collect();
        Ok(BaselineDistribution {
            log_p0,
            smoothing_floor,
        })
    }

    pub fn log_p0(&self, c: char) -> Option<f64> {
        self.log_p0.get(&c).copied()
    }

    /// A copy with every probability multiplied by a constant, leaving the
    /// distribution unnormalized. Only used to test ranking invariances.
    #[cfg(test)]
    pub(crate) fn scaled_by(&self, ln_factor: f64) -> Self {
        BaselineDistribution {
            log_p0: self
                .log_p0
                .iter()
                .map(|(&c, &lp)| (c, lp + ln_factor))
                .collect(),
            smoothing_floor: self.smoothing_floor + ln_factor,
        }
    }

    pub fn smoothing_floor(&self) -> f64 {
        self.smoothing_floor
    }

    pub fn alphabet_len(&self) -> usize {
        self.log_p0.len()
    }

    /// Sum of per-character log-probabilities; `None` if any character is
    /// outside the alphabet.
    pub fn log_prob(&self, letters: &[char]) -> Option<f64> {
        letters.iter().try_fold(0.0, |acc, &c| Some(acc + self.log_p0(c)?))
    }
}
