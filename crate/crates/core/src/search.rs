//! Corpus scanning: enumerate every candidate window, keep the global top-K
//! in a bounded min-heap, and merge overlapping survivors into result
//! clusters.
//!
//! Scanning is deterministic for any thread count: workers scan disjoint
//! documents into private heaps and the final merge is an exact top-K of the
//! union, so scheduling cannot change the result.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::ingest::{extract_initials, CorpusReader, InitialLetterSequence};
use crate::lm::{BaselineDistribution, BaselineError, UnigramVocab};
use crate::profile::LanguageProfile;
use crate::scorer::{best_segmentation, ScoreError, ScoredSegmentation};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus contains no letters to scan")]
    EmptyCorpus,
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("failed to build worker pool: {0}")]
    ThreadPool(String),
}

/// Window enumeration and ranking parameters.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Longest candidate window, in letters.
    pub max_len: usize,
    /// Shortest candidate window, in letters.
    pub min_len: usize,
    /// Number of candidates retained globally (the heap size K).
    pub heap_capacity: usize,
    /// Worker threads for the scan phase.
    pub threads: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_len: 40,
            min_len: 5,
            heap_capacity: 10_000,
            threads: 1,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(SearchError::InvalidConfig(format!(
                "need 0 < min_len <= max_len, got min_len={} max_len={}",
                self.min_len, self.max_len
            )));
        }
        if self.heap_capacity == 0 {
            return Err(SearchError::InvalidConfig("heap capacity must be >= 1".into()));
        }
        if self.threads == 0 {
            return Err(SearchError::InvalidConfig("threads must be >= 1".into()));
        }
        Ok(())
    }
}

/// One candidate window held by the heap. Carries everything needed to
/// report it without re-reading the source document.
#[derive(Debug, Clone)]
pub struct HeapEntry {
    pub log_rank: f64,
    pub doc_id: Arc<str>,
    pub start: u32,
    pub end: u32,
    pub unit_start: u32,
    pub unit_end: u32,
    pub text: Box<str>,
}

impl HeapEntry {
    /// Total order: higher log_rank is better; ties prefer the
    /// lexicographically smaller (doc_id, start, end).
    fn cmp_quality(&self, other: &Self) -> Ordering {
        self.log_rank
            .total_cmp(&other.log_rank)
            .then_with(|| other.doc_id.cmp(&self.doc_id))
            .then_with(|| other.start.cmp(&self.start))
            .then_with(|| other.end.cmp(&self.end))
    }
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_quality(other) == Ordering::Equal
    }
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_quality(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_quality(other)
    }
}

/// Bounded min-rooted heap keeping the K best candidates seen so far.
#[derive(Debug)]
pub struct TopKHeap {
    heap: BinaryHeap<std::cmp::Reverse<HeapEntry>>,
    capacity: usize,
}

impl TopKHeap {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "heap capacity must be >= 1");
        TopKHeap {
            heap: BinaryHeap::with_capacity(capacity + 1),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Would a candidate with this key enter the heap right now?
    pub fn accepts(&self, log_rank: f64, doc_id: &str, start: u32, end: u32) -> bool {
        if self.heap.len() < self.capacity {
            return true;
        }
        let worst = &self.heap.peek().expect("heap is full").0;
        match log_rank.total_cmp(&worst.log_rank) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match worst.doc_id.as_ref().cmp(doc_id) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => (worst.start, worst.end) > (start, end),
            },
        }
    }

    /// Offer a candidate; returns whether it was retained.
    pub fn offer(&mut self, entry: HeapEntry) -> bool {
        if self.heap.len() < self.capacity {
            self.heap.push(std::cmp::Reverse(entry));
            return true;
        }
        if !self.accepts(entry.log_rank, &entry.doc_id, entry.start, entry.end) {
            return false;
        }
        self.heap.pop();
        self.heap.push(std::cmp::Reverse(entry));
        true
    }

    /// Exact merge: the result holds the top-K of the union of both heaps.
    pub fn merge(&mut self, other: TopKHeap) {
        for std::cmp::Reverse(entry) in other.heap {
            self.offer(entry);
        }
    }

    /// Drain into a list sorted best-first.
    pub fn into_sorted_entries(self) -> Vec<HeapEntry> {
        let mut entries: Vec<HeapEntry> = self.heap.into_iter().map(|r| r.0).collect();
        entries.sort_unstable_by(|a, b| b.cmp_quality(a));
        entries
    }

    /// Resolve entries into reportable candidates, re-deriving each window's
    /// best tokenization (identical to the score used during the scan).
    pub fn into_candidates(
        self,
        vocab: &UnigramVocab,
        baseline: &BaselineDistribution,
    ) -> Result<Vec<CandidateAcrostic>, ScoreError> {
        self.into_sorted_entries()
            .into_iter()
            .map(|entry| {
                let letters: Vec<char> = entry.text.chars().collect();
                let segmentation = best_segmentation(&letters, vocab, baseline)?;
                debug_assert_eq!(segmentation.log_rank.to_bits(), entry.log_rank.to_bits());
                Ok(CandidateAcrostic {
                    doc_id: entry.doc_id.to_string(),
                    start: entry.start as usize,
                    end: entry.end as usize,
                    text: entry.text.into(),
                    segmentation,
                    unit_start: entry.unit_start,
                    unit_end: entry.unit_end,
                })
            })
            .collect()
    }
}

/// A candidate window with its best tokenization and provenance.
#[derive(Debug, Clone)]
pub struct CandidateAcrostic {
    pub doc_id: String,
    /// Letter span `[start, end)` in the document's initial-letter sequence.
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub segmentation: ScoredSegmentation,
    /// First and last (inclusive) source unit indices.
    pub unit_start: u32,
    pub unit_end: u32,
}

impl CandidateAcrostic {
    pub fn log_rank(&self) -> f64 {
        self.segmentation.log_rank
    }

    fn cmp_quality(&self, other: &Self) -> Ordering {
        self.segmentation
            .log_rank
            .total_cmp(&other.segmentation.log_rank)
            .then_with(|| other.doc_id.cmp(&self.doc_id))
            .then_with(|| other.start.cmp(&self.start))
            .then_with(|| other.end.cmp(&self.end))
    }
}

/// Heap candidates from one document whose spans transitively overlap,
/// reported as a single finding.
#[derive(Debug, Clone)]
pub struct ResultCluster {
    pub doc_id: String,
    /// Members sorted best-first; `members[0]` is the representative.
    pub members: Vec<CandidateAcrostic>,
    /// Union of member letter spans.
    pub extent: (usize, usize),
    /// Union of member unit ranges (inclusive).
    pub unit_extent: (u32, u32),
    /// Letters over the whole extent.
    pub text: String,
    /// Best tokenization of the extent text.
    pub tokens: Vec<String>,
}

impl ResultCluster {
    pub fn representative(&self) -> &CandidateAcrostic {
        &self.members[0]
    }

    /// Cluster rank: the rank of its best member.
    pub fn log_rank(&self) -> f64 {
        self.members[0].segmentation.log_rank
    }
}

/// Scan every window of one document's letters and offer it to the heap.
///
/// Every window `[s, e)` with `min_len <= e - s <= max_len` is scored with
/// exactly the same lattice recurrence as [`best_segmentation`], via one
/// suffix DP per end position.
pub fn scan_document(
    seq: &InitialLetterSequence,
    vocab: &UnigramVocab,
    baseline: &BaselineDistribution,
    config: &SearchConfig,
    heap: &mut TopKHeap,
) -> Result<(), ScoreError> {
    let letters = seq.letters();
    let n = letters.len();
    if n < config.min_len {
        return Ok(());
    }

    // Baseline prefix sums: log P0 of [i, j) is bprefix[j] - bprefix[i].
    let mut bprefix = Vec::with_capacity(n + 1);
    bprefix.push(0.0);
    for &c in letters {
        let lp = baseline.log_p0(c).ok_or(ScoreError::OutsideAlphabet(c))?;
        bprefix.push(bprefix.last().expect("non-empty") + lp);
    }

    // Tokens starting at each position, found once per document.
    let starts: Vec<_> = (0..n)
        .map(|s| vocab.matches_at(letters, s, config.max_len))
        .collect();

    let doc_id: Arc<str> = Arc::from(seq.doc_id());
    // g[d] = best model log-prob of letters[e-d .. e) for the current end e.
    let mut g = vec![0.0f64; config.max_len + 1];
    for e in 1..=n {
        let dmax = e.min(config.max_len);
        for d in 1..=dmax {
            let s = e - d;
            let mut best = f64::NEG_INFINITY;
            for &(len, lp) in &starts[s] {
                let len = len as usize;
                if len <= d {
                    let v = lp + g[d - len];
                    if v > best {
                        best = v;
                    }
                }
            }
            g[d] = best;
            if d >= config.min_len {
                let log_rank = g[d] - (bprefix[e] - bprefix[s]);
                if heap.accepts(log_rank, &doc_id, s as u32, e as u32) {
                    let (unit_start, unit_end) = seq.unit_range(s, e);
                    heap.offer(HeapEntry {
                        log_rank,
                        doc_id: Arc::clone(&doc_id),
                        start: s as u32,
                        end: e as u32,
                        unit_start,
                        unit_end,
                        text: seq.window_text(s, e).into(),
                    });
                }
            }
        }
    }
    Ok(())
}

/// Merge candidates into clusters: same document, transitively overlapping
/// letter spans. Clusters come back sorted by descending representative
/// rank.
pub fn cluster_results(
    candidates: Vec<CandidateAcrostic>,
    vocab: &UnigramVocab,
    baseline: &BaselineDistribution,
) -> Result<Vec<ResultCluster>, ScoreError> {
    let mut by_doc: BTreeMap<String, Vec<CandidateAcrostic>> = BTreeMap::new();
    for c in candidates {
        by_doc.entry(c.doc_id.clone()).or_default().push(c);
    }

    let mut clusters = Vec::new();
    for (doc_id, mut members) in by_doc {
        members.sort_by(|a, b| (a.start, a.end).cmp(&(b.start, b.end)));
        let mut open: Vec<CandidateAcrostic> = Vec::new();
        let mut open_end = 0usize;
        for cand in members {
            if !open.is_empty() && cand.start < open_end {
                open_end = open_end.max(cand.end);
                open.push(cand);
            } else {
                if !open.is_empty() {
                    clusters.push(build_cluster(&doc_id, std::mem::take(&mut open), vocab, baseline)?);
                }
                open_end = cand.end;
                open.push(cand);
            }
        }
        if !open.is_empty() {
            clusters.push(build_cluster(&doc_id, open, vocab, baseline)?);
        }
    }

    clusters.sort_by(|a, b| b.members[0].cmp_quality(&a.members[0]));
    Ok(clusters)
}

fn build_cluster(
    doc_id: &str,
    mut members: Vec<CandidateAcrostic>,
    vocab: &UnigramVocab,
    baseline: &BaselineDistribution,
) -> Result<ResultCluster, ScoreError> {
    let extent_start = members.iter().map(|m| m.start).min().expect("non-empty");
    let extent_end = members.iter().map(|m| m.end).max().expect("non-empty");
    let unit_start = members.iter().map(|m| m.unit_start).min().expect("non-empty");
    let unit_end = members.iter().map(|m| m.unit_end).max().expect("non-empty");

    // Chain overlap keeps the union contiguous, so member texts tile the
    // whole extent.
    let mut extent_chars: Vec<char> = vec!['\0'; extent_end - extent_start];
    for m in &members {
        for (i, c) in m.text.chars().enumerate() {
            extent_chars[m.start - extent_start + i] = c;
        }
    }
    debug_assert!(!extent_chars.contains(&'\0'));

    let tokens = best_segmentation(&extent_chars, vocab, baseline)?.tokens;
    members.sort_by(|a, b| b.cmp_quality(a));
    Ok(ResultCluster {
        doc_id: doc_id.to_string(),
        members,
        extent: (extent_start, extent_end),
        unit_extent: (unit_start, unit_end),
        text: extent_chars.into_iter().collect(),
        tokens,
    })
}

/// Counters and timings from one full search.
#[derive(Debug, Clone, Default)]
pub struct ScanStats {
    pub documents: u64,
    pub units: u64,
    pub letters: u64,
    pub read_errors: u64,
    pub skipped_records: u64,
    pub duplicate_ids: u64,
    pub ingest_elapsed: Duration,
    pub scan_elapsed: Duration,
}

#[derive(Debug)]
pub struct SearchOutcome {
    pub clusters: Vec<ResultCluster>,
    pub stats: ScanStats,
}

/// Run the full pipeline over a corpus: ingest and extract sequentially,
/// estimate the baseline if none is supplied, scan in parallel, cluster.
///
/// The cluster list is identical for any `threads` value, including 1.
pub fn run_search(
    reader: CorpusReader,
    profile: &LanguageProfile,
    vocab: &UnigramVocab,
    baseline: Option<BaselineDistribution>,
    config: &SearchConfig,
    mut on_warning: impl FnMut(&str),
) -> Result<SearchOutcome, SearchError> {
    config.validate()?;
    let mut stats = ScanStats::default();
    let ingest_start = Instant::now();
    let reader_stats = reader.stats();

    let mut sequences: Vec<InitialLetterSequence> = Vec::new();
    for item in reader {
        match item {
            Ok(doc) => {
                stats.documents += 1;
                stats.units += doc.units.len() as u64;
                let seq = extract_initials(&doc, profile);
                stats.letters += seq.len() as u64;
                if !seq.is_empty() {
                    sequences.push(seq);
                }
            }
            Err(e) => {
                stats.read_errors += 1;
                on_warning(&e.to_string());
            }
        }
    }
    stats.skipped_records = reader_stats.skipped_records();
    stats.duplicate_ids = reader_stats.duplicate_ids();
    stats.ingest_elapsed = ingest_start.elapsed();

    if stats.letters == 0 {
        return Err(SearchError::EmptyCorpus);
    }
    let baseline = match baseline {
        Some(b) => b,
        None => BaselineDistribution::estimate(&sequences, profile)?,
    };

    let scan_start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| SearchError::ThreadPool(e.to_string()))?;
    let heap = pool.install(|| {
        sequences
            .par_iter()
            .try_fold(
                || TopKHeap::new(config.heap_capacity),
                |mut heap, seq| {
                    scan_document(seq, vocab, &baseline, config, &mut heap)?;
                    Ok::<_, ScoreError>(heap)
                },
            )
            .try_reduce(
                || TopKHeap::new(config.heap_capacity),
                |mut a, b| {
                    a.merge(b);
                    Ok(a)
                },
            )
    })?;

    let candidates = heap.into_candidates(vocab, &baseline)?;
    let clusters = cluster_results(candidates, vocab, &baseline)?;
    stats.scan_elapsed = scan_start.elapsed();

    Ok(SearchOutcome { clusters, stats })
}
