//! Detection and ranking of acrostics hidden in the initial letters of
//! consecutive lines or paragraphs.
//!
//! The pipeline reads a corpus ([`ingest`]), reduces every document to its
//! sequence of normalized initial letters, scores candidate letter windows by
//! the log-ratio between a unigram subword language model and a background
//! distribution of line-initial letters ([`lm`], [`scorer`]), keeps the
//! global top-K candidates in a bounded heap, merges overlapping candidates
//! into result clusters ([`search`]), and scores ranked results against
//! ground-truth labels ([`eval`]).

pub mod eval;
pub mod ingest;
pub mod lm;
pub mod profile;
pub mod report;
pub mod scorer;
pub mod search;

pub use ingest::{CorpusFormat, Document, InitialLetterSequence, UnitMode};
pub use lm::{BaselineDistribution, UnigramVocab};
pub use profile::LanguageProfile;
pub use scorer::{ScoredSegmentation, SegmentationCache};
pub use search::{CandidateAcrostic, ResultCluster, SearchConfig, TopKHeap};
