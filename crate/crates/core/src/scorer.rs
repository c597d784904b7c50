//! Window scoring: best tokenization under the unigram model and the
//! log-rank ratio against the baseline.
//!
//! For a letter string `s`, the model probability is maximized over every
//! tokenization by dynamic programming on the token lattice; the baseline
//! probability is the product of per-character probabilities. The reported
//! `log_rank` is `log P(s | model) - log P(s | baseline)`: the higher, the
//! less likely the window arose by chance.

use std::num::NonZeroUsize;

use lru::LruCache;
use thiserror::Error;

use crate::ingest::InitialLetterSequence;
use crate::lm::{BaselineDistribution, UnigramVocab};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("cannot score an empty string")]
    EmptyInput,
    #[error("character {0:?} is not in the alphabet")]
    OutsideAlphabet(char),
    #[error("window [{start}, {end}) is invalid for a sequence of {len} letters")]
    InvalidWindow { start: usize, end: usize, len: usize },
}

/// A scored tokenization of one letter window.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSegmentation {
    /// Best tokenization; concatenating the tokens reproduces the window.
    pub tokens: Vec<String>,
    /// `log P(s | model)`: sum of token log-probabilities, maximized over
    /// tokenizations.
    pub log_p_lm: f64,
    /// `log P(s | baseline)`: sum of per-character baseline log-probabilities.
    pub log_p_baseline: f64,
    /// `log_p_lm - log_p_baseline`.
    pub log_rank: f64,
}

#[derive(Clone, Copy)]
struct Cell {
    log_p: f64,
    tokens: u32,
}

/// Best segmentation of `letters` under `vocab`, scored against `baseline`.
///
/// Ties on probability are broken by fewer tokens, then by the
/// lexicographically smallest token sequence, so repeated calls return an
/// identical result.
pub fn best_segmentation(
    letters: &[char],
    vocab: &UnigramVocab,
    baseline: &BaselineDistribution,
) -> Result<ScoredSegmentation, ScoreError> {
    if letters.is_empty() {
        return Err(ScoreError::EmptyInput);
    }
    let log_p_baseline = baseline_log_prob(letters, baseline)?;
    let n = letters.len();

    // Suffix DP: cells[i] is the best (log_p, token count) for letters[i..].
    // Summation order (token + suffix) matches the incremental scan in
    // `search`, so both routes produce bit-identical totals.
    let mut cells = vec![
        Cell {
            log_p: 0.0,
            tokens: 0
        };
        n + 1
    ];
    for i in (0..n).rev() {
        let mut best: Option<Cell> = None;
        for (len, lp) in vocab.matches_at(letters, i, n - i) {
            let next = &cells[i + len as usize];
            let cand = Cell {
                log_p: lp + next.log_p,
                tokens: 1 + next.tokens,
            };
            let better = match best {
                None => true,
                Some(b) => cand.log_p > b.log_p || (cand.log_p == b.log_p && cand.tokens < b.tokens),
            };
            if better {
                best = Some(cand);
            }
        }
        // Every alphabet character has at least its single-char piece.
        cells[i] = best.ok_or(ScoreError::OutsideAlphabet(letters[i]))?;
    }

    // Reconstruct left to right. Candidate tokens at one position are
    // prefixes of each other, so the lexicographically smallest optimal
    // continuation is the shortest one.
    let mut tokens = Vec::with_capacity(cells[0].tokens as usize);
    let mut pos = 0;
    while pos < n {
        let target = cells[pos];
        let mut chosen: Option<u8> = None;
        for (len, lp) in vocab.matches_at(letters, pos, n - pos) {
            let next = &cells[pos + len as usize];
            if lp + next.log_p == target.log_p && 1 + next.tokens == target.tokens {
                chosen = Some(len);
                break;
            }
        }
        let len = chosen.expect("DP cell is achieved by one of its candidates") as usize;
        tokens.push(letters[pos..pos + len].iter().collect());
        pos += len;
    }

    let log_p_lm = cells[0].log_p;
    Ok(ScoredSegmentation {
        tokens,
        log_p_lm,
        log_p_baseline,
        log_rank: log_p_lm - log_p_baseline,
    })
}

fn baseline_log_prob(
    letters: &[char],
    baseline: &BaselineDistribution,
) -> Result<f64, ScoreError> {
    let mut sum = 0.0;
    for &c in letters {
        sum += baseline.log_p0(c).ok_or(ScoreError::OutsideAlphabet(c))?;
    }
    Ok(sum)
}

/// Bounded LRU memo from window content to its scored segmentation.
///
/// Keying by content (not position) lets commonly occurring substrings be
/// reused across windows and documents. A hit returns a value identical to
/// recomputation.
#[derive(Debug)]
pub struct SegmentationCache {
    map: LruCache<String, ScoredSegmentation>,
    hits: u64,
    misses: u64,
    evictions: u64,
}

pub const DEFAULT_CACHE_CAPACITY: usize = 1 << 20;

impl SegmentationCache {
    pub fn new() -> Self {
        Self::with_capacity(DEFAULT_CACHE_CAPACITY)
    }

    pub fn with_capacity(capacity: usize) -> Self {
        let capacity = NonZeroUsize::new(capacity.max(1)).expect("max(1) is non-zero");
        SegmentationCache {
            map: LruCache::new(capacity),
            hits: 0,
            misses: 0,
            evictions: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.map.cap().get()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn evictions(&self) -> u64 {
        self.evictions
    }

    fn get(&mut self, key: &str) -> Option<ScoredSegmentation> {
        match self.map.get(key) {
            Some(v) => {
                self.hits += 1;
                Some(v.clone())
            }
            None => {
                self.misses += 1;
                None
            }
        }
    }

    fn insert(&mut self, key: String, value: ScoredSegmentation) {
        // push returns the displaced entry; same-key replacement is not an
        // eviction.
        if let Some((old_key, _)) = self.map.push(key.clone(), value) {
            if old_key != key {
                self.evictions += 1;
            }
        }
    }
}

impl Default for SegmentationCache {
    fn default() -> Self {
        Self::new()
    }
}

/// Score the window `[start, end)` of a sequence, consulting and updating
/// the cache. Equivalent to [`best_segmentation`] on the window's letters.
pub fn rank_window(
    seq: &InitialLetterSequence,
    start: usize,
    end: usize,
    vocab: &UnigramVocab,
    baseline: &BaselineDistribution,
    cache: &mut SegmentationCache,
) -> Result<ScoredSegmentation, ScoreError> {
    if start >= end || end > seq.len() {
        return Err(ScoreError::InvalidWindow {
            start,
            end,
            len: seq.len(),
        });
    }
    let letters = &seq.letters()[start..end];
    let key: String = letters.iter().collect();
    if let Some(hit) = cache.get(&key) {
        return Ok(hit);
    }
    let scored = best_segmentation(letters, vocab, baseline)?;
    cache.insert(key, scored.clone());
    Ok(scored)
}
