//! Line-delimited JSON corpus reader: one `{"id": ..., "text": ...}` per line.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::{DocumentError, IngestStats, RawDoc};

#[derive(Deserialize)]
struct Record {
    id: String,
    text: String,
}

pub(super) fn read(path: &Path, stats: Arc<IngestStats>) -> Iter {
    match File::open(path) {
        Ok(f) => Iter {
            lines: Some((BufReader::new(f).lines(), 0)),
            pending: None,
            stats,
        },
        // read_corpus checked existence; a racing delete still surfaces as
        // a single per-document error.
        Err(e) => Iter {
            lines: None,
            pending: Some(DocumentError {
                doc_id: path.display().to_string(),
                message: format!("open failed: {e}"),
            }),
            stats,
        },
    }
}

pub(super) struct Iter {
    lines: Option<(std::io::Lines<BufReader<File>>, usize)>,
    pending: Option<DocumentError>,
    stats: Arc<IngestStats>,
}

impl Iterator for Iter {
    type Item = Result<RawDoc, DocumentError>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(err) = self.pending.take() {
            return Some(Err(err));
        }
        let (lines, lineno) = self.lines.as_mut()?;
        loop {
            *lineno += 1;
            match lines.next()? {
                Ok(line) => {
                    if line.trim().is_empty() {
                        continue;
                    }
                    match serde_json::from_str::<Record>(&line) {
                        Ok(rec) => {
                            return Some(Ok(RawDoc {
                                doc_id: rec.id,
                                text: rec.text,
                            }))
                        }
                        // Malformed record: skip with a warning counter.
                        Err(_) => {
                            self.stats.count_skipped();
                            continue;
                        }
                    }
                }
                Err(e) => {
                    let lineno = *lineno;
                    self.lines = None;
                    return Some(Err(DocumentError {
                        doc_id: format!("<jsonl line {lineno}>"),
                        message: format!("read failed: {e}"),
                    }));
                }
            }
        }
    }
}
