//! Corpus readers and initial-letter extraction.
//!
//! Three source formats produce [`Document`]s: a directory of plain-text
//! files, line-delimited JSON records, and MediaWiki XML dumps (markup
//! stripped best-effort). Every document is then reduced to an
//! [`InitialLetterSequence`]: one normalized letter per text unit, with a
//! back-pointer to the unit it came from.

mod jsonl;
mod mediawiki;
mod plain_dir;
mod wikitext;

pub use wikitext::strip_wikitext;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::profile::LanguageProfile;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("corpus path {path} is not readable: {source}")]
    CorpusPath {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus path {path}: expected {expected} for format {format:?}")]
    FormatMismatch {
        path: String,
        expected: &'static str,
        format: CorpusFormat,
    },
}

/// A per-document failure. The stream continues after yielding one.
#[derive(Debug, Error)]
#[error("document {doc_id}: {message}")]
pub struct DocumentError {
    pub doc_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum UnitMode {
    Line,
    Paragraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// UTF-8 text files under a directory, walked recursively.
    PlainDir,
    /// One JSON object per line with required fields `id` and `text`.
    DocJsonl,
    /// A MediaWiki export: `<page><title>..<revision><text>..` structure.
    MediawikiXml,
}

/// One line or one paragraph, with the 1-based line number where it starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextUnit {
    pub text: String,
    pub line: usize,
}

/// A source text split into ordered units.
#[derive(Debug, Clone)]
pub struct Document {
    pub doc_id: String,
    pub unit_mode: UnitMode,
    pub units: Vec<TextUnit>,
}

impl Document {
    pub fn from_text(doc_id: impl Into<String>, text: &str, unit_mode: UnitMode) -> Self {
        Document {
            doc_id: doc_id.into(),
            unit_mode,
            units: split_units(text, unit_mode),
        }
    }
}

/// Split text into units. `Line` mode splits on line terminators and keeps
/// empty lines as (empty) units; `Paragraph` mode splits on runs of one or
/// more blank lines, where blank means empty after trimming whitespace.
pub fn split_units(text: &str, unit_mode: UnitMode) -> Vec<TextUnit> {
    match unit_mode {
        UnitMode::Line => text
            .lines()
            .enumerate()
            .map(|(i, l)| TextUnit {
                text: l.to_string(),
                line: i + 1,
            })
            .collect(),
        UnitMode::Paragraph => {
            let mut units = Vec::new();
            let mut current: Option<TextUnit> = None;
            for (i, l) in text.lines().enumerate() {
                if l.trim().is_empty() {
                    if let Some(unit) = current.take() {
                        units.push(unit);
                    }
                } else {
                    match &mut current {
                        Some(unit) => {
                            unit.text.push('\n');
                            unit.text.push_str(l);
                        }
                        None => {
                            current = Some(TextUnit {
                                text: l.to_string(),
                                line: i + 1,
                            })
                        }
                    }
                }
            }
            if let Some(unit) = current.take() {
                units.push(unit);
            }
            units
        }
    }
}

/// A document reduced to its per-unit initial letters.
///
/// `letters` is dense: units with no alphabet character contribute nothing
/// and introduce no gap. `unit_index[i]` is the index (into
/// [`Document::units`]) of the unit letter `i` came from, strictly
/// increasing.
#[derive(Debug, Clone)]
pub struct InitialLetterSequence {
    doc_id: String,
    letters: Vec<char>,
    unit_index: Vec<u32>,
}

impl InitialLetterSequence {
    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[char] {
        &self.letters
    }

    pub fn unit_index(&self) -> &[u32] {
        &self.unit_index
    }

    /// The letters of the half-open window `[start, end)` as a string.
    pub fn window_text(&self, start: usize, end: usize) -> String {
        self.letters[start..end].iter().collect()
    }

    /// First and last (inclusive) source unit indices of a letter window.
    pub fn unit_range(&self, start: usize, end: usize) -> (u32, u32) {
        (self.unit_index[start], self.unit_index[end - 1])
    }
}

/// Extract the initial-letter sequence of a document: for each unit, the
/// first character that normalizes into the profile's alphabet.
pub fn extract_initials(doc: &Document, profile: &LanguageProfile) -> InitialLetterSequence {
    let mut letters = Vec::with_capacity(doc.units.len());
    let mut unit_index = Vec::with_capacity(doc.units.len());
    for (i, unit) in doc.units.iter().enumerate() {
        if let Some(c) = profile.first_letter(&unit.text) {
            letters.push(c);
            unit_index.push(i as u32);
        }
    }
    InitialLetterSequence {
        doc_id: doc.doc_id.clone(),
        letters,
        unit_index,
    }
}

/// Running counters for a corpus read.
#[derive(Debug, Default)]
pub struct IngestStats {
    /// Malformed records (bad JSONL lines, pages without title/text) that
    /// were skipped.
    skipped_records: AtomicU64,
    /// Documents dropped because their id repeated an earlier one.
    duplicate_ids: AtomicU64,
}

impl IngestStats {
    pub fn skipped_records(&self) -> u64 {
        self.skipped_records.load(Ordering::Relaxed)
    }

    pub fn duplicate_ids(&self) -> u64 {
        self.duplicate_ids.load(Ordering::Relaxed)
    }

    pub(crate) fn count_skipped(&self) {
        self.skipped_records.fetch_add(1, Ordering::Relaxed);
    }

    fn count_duplicate(&self) {
        self.duplicate_ids.fetch_add(1, Ordering::Relaxed);
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub format: CorpusFormat,
    pub unit_mode: UnitMode,
    /// File extensions (lowercase, without dot) accepted by `PlainDir`.
    pub extensions: Vec<String>,
}

impl IngestOptions {
    pub fn new(format: CorpusFormat, unit_mode: UnitMode) -> Self {
        IngestOptions {
            format,
            unit_mode,
            extensions: vec!["txt".to_string()],
        }
    }
}

pub(crate) struct RawDoc {
    pub doc_id: String,
    pub text: String,
}

type RawStream = Box<dyn Iterator<Item = Result<RawDoc, DocumentError>> + Send>;

/// Streaming corpus reader: yields one [`Document`] per source record, in a
/// deterministic order for a fixed input. Unreadable files surface as
/// per-document errors; malformed records are skipped and counted.
pub struct CorpusReader {
    inner: RawStream,
    unit_mode: UnitMode,
    stats: Arc<IngestStats>,
    seen_ids: HashSet<String>,
}

impl CorpusReader {
    pub fn stats(&self) -> Arc<IngestStats> {
        Arc::clone(&self.stats)
    }
}

impl Iterator for CorpusReader {
    type Item = Result<Document, DocumentError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.inner.next()? {
                Ok(raw) => {
                    if !self.seen_ids.insert(raw.doc_id.clone()) {
                        self.stats.count_duplicate();
                        continue;
                    }
                    return Some(Ok(Document::from_text(
                        raw.doc_id,
                        &raw.text,
                        self.unit_mode,
                    )));
                }
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

impl fmt::Debug for CorpusReader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorpusReader")
            .field("unit_mode", &self.unit_mode)
            .finish_non_exhaustive()
    }
}

/// Open a corpus for reading. Fails fast when the path does not exist or
/// plainly mismatches the format (e.g. a directory passed as JSONL).
pub fn read_corpus(path: impl AsRef<Path>, options: IngestOptions) -> Result<CorpusReader, IngestError> {
    let path = path.as_ref();
    let meta = std::fs::metadata(path).map_err(|source| IngestError::CorpusPath {
        path: path.display().to_string(),
        source,
    })?;
    let inner: RawStream = match options.format {
        CorpusFormat::PlainDir => {
            if !meta.is_dir() {
                return Err(IngestError::FormatMismatch {
                    path: path.display().to_string(),
                    expected: "a directory",
                    format: options.format,
                });
            }
            Box::new(plain_dir::read(path, &options.extensions))
        }
        CorpusFormat::DocJsonl | CorpusFormat::MediawikiXml => {
            if !meta.is_file() {
                return Err(IngestError::FormatMismatch {
                    path: path.display().to_string(),
                    expected: "a file",
                    format: options.format,
                });
            }
            let stats_handle = Arc::new(IngestStats::default());
            let stream: RawStream = match options.format {
                CorpusFormat::DocJsonl => Box::new(jsonl::read(path, Arc::clone(&stats_handle))),
                CorpusFormat::MediawikiXml => {
                    Box::new(mediawiki::read(path, Arc::clone(&stats_handle)))
                }
                CorpusFormat::PlainDir => unreachable!(),
            };
            return Ok(CorpusReader {
                inner: stream,
                unit_mode: options.unit_mode,
                stats: stats_handle,
                seen_ids: HashSet::new(),
            });
        }
    };
    Ok(CorpusReader {
        inner,
        unit_mode: options.unit_mode,
        stats: Arc::new(IngestStats::default()),
        seen_ids: HashSet::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn en() -> LanguageProfile {
        LanguageProfile::builtin("en").unwrap()
    }

    fn unit_texts(units: &[TextUnit]) -> Vec<&str> {
        units.iter().map(|u| u.text.as_str()).collect()
    }

    #[test]
    fn split_line_mode() {
        let units = split_units("a\nb\n\nc", UnitMode::Line);
        assert_eq!(unit_texts(&units), vec!["a", "b", "", "c"]);
        assert_eq!(units.iter().map(|u| u.line).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn split_paragraph_mode() {
        let units = split_units("a\nb\n\nc", UnitMode::Paragraph);
        assert_eq!(unit_texts(&units), vec!["a\nb", "c"]);
        assert_eq!(units[0].line, 1);
        assert_eq!(units[1].line, 4);
    }

    #[test]
    fn split_paragraph_whitespace_only_lines_are_blank() {
        let units = split_units("a\n  \t\nb\n\n\n\nc\n", UnitMode::Paragraph);
        assert_eq!(unit_texts(&units), vec!["a", "b", "c"]);
    }

    #[test]
    fn split_handles_crlf() {
        let units = split_units("a\r\nb\r\n\r\nc", UnitMode::Line);
        assert_eq!(unit_texts(&units), vec!["a", "b", "", "c"]);
        let units = split_units("a\r\nb\r\n\r\nc", UnitMode::Paragraph);
        assert_eq!(unit_texts(&units), vec!["a\nb", "c"]);
    }

    #[test]
    fn extract_skips_nonletter_prefix_within_unit() {
        let doc = Document::from_text(
            "d",
            "The first\nHobbled along\n  1. Of the things\n",
            UnitMode::Line,
        );
        let seq = extract_initials(&doc, &en());
        assert_eq!(seq.letters(), &['t', 'h', 'o']);
        assert_eq!(seq.unit_index(), &[0, 1, 2]);
    }

    #[test]
    fn extract_drops_letterless_units_densely() {
        let doc = Document::from_text("d", "---\nBeta", UnitMode::Line);
        let seq = extract_initials(&doc, &en());
        assert_eq!(seq.letters(), &['b']);
        assert_eq!(seq.unit_index(), &[1]);
    }

    #[test]
    fn hobbes_paragraph_initials() {
        // Fourteen opening paragraphs whose initials spell the signature.
        let initials = "thomasofhobbes";
        let text: String = initials
            .chars()
            .map(|c| {
                let upper = c.to_ascii_uppercase();
                format!("{upper}his paragraph stands alone,\nwrapping over two lines.\n\n")
            })
            .collect();
        let doc = Document::from_text("elements", &text, UnitMode::Paragraph);
        assert_eq!(doc.units.len(), 14);
        let seq = extract_initials(&doc, &en());
        let got: String = seq.letters().iter().collect();
        assert_eq!(got, initials);
    }

    #[test]
    fn window_accessors() {
        let doc = Document::from_text("d", "alpha\n-\nbravo\ncharlie\n", UnitMode::Line);
        let seq = extract_initials(&doc, &en());
        assert_eq!(seq.window_text(1, 3), "bc");
        assert_eq!(seq.unit_range(1, 3), (2, 3));
    }

    proptest! {
        /// Provenance: every letter's recorded unit re-derives that letter,
        /// and unit indices are strictly increasing.
        #[test]
        fn provenance_round_trip(text in "[a-zA-Z0-9 .,!\n'\"-]{0,300}") {
            let p = en();
            for mode in [UnitMode::Line, UnitMode::Paragraph] {
                let doc = Document::from_text("d", &text, mode);
                let seq = extract_initials(&doc, &p);
                prop_assert_eq!(seq.letters().len(), seq.unit_index().len());
                let mut prev: Option<u32> = None;
                for (i, &u) in seq.unit_index().iter().enumerate() {
                    if let Some(pv) = prev {
                        prop_assert!(u > pv);
                    }
                    prev = Some(u);
                    let unit = &doc.units[u as usize];
                    prop_assert_eq!(p.first_letter(&unit.text), Some(seq.letters()[i]));
                    prop_assert!(p.contains(seq.letters()[i]));
                }
            }
        }
    }
}
