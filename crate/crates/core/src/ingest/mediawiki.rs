//! MediaWiki XML dump reader.
//!
//! Walks `<page>` elements, takes the title and the text of the last
//! `<revision>` in each page, and strips wiki markup best-effort. Pages
//! missing a title or text are skipped and counted.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use quick_xml::events::Event;
use quick_xml::Reader;

use super::wikitext::strip_wikitext;
use super::{DocumentError, IngestStats, RawDoc};

pub(super) fn read(path: &Path, stats: Arc<IngestStats>) -> Iter {
    match File::open(path) {
        Ok(f) => {
            let mut reader = Reader::from_reader(BufReader::new(f));
            reader.config_mut().trim_text(false);
            Iter {
                reader: Some(reader),
                pending: None,
                buf: Vec::new(),
                stats,
            }
        }
        Err(e) => Iter {
            reader: None,
            pending: Some(DocumentError {
                doc_id: path.display().to_string(),
                message: format!("open failed: {e}"),
            }),
            buf: Vec::new(),
            stats,
        },
    }
}

pub(super) struct Iter {
    reader: Option<Reader<BufReader<File>>>,
    pending: Option<DocumentError>,
    buf: Vec<u8>,
    stats: Arc<IngestStats>,
}

#[derive(Default)]
struct PageState {
    title: Option<String>,
    // Text of the latest <revision> seen so far in this page.
    revision_text: Option<String>,
    in_revision: bool,
    capture: Capture,
}

#[derive(Default, PartialEq)]
enum Capture {
    #[default]
    None,
    Title,
    Text,
}

impl Iterator for Iter {
    type Item = Result<RawDoc, DocumentError>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Some(err) = self.pending.take() {
            return Some(Err(err));
        }
        let reader = self.reader.as_mut()?;
        let mut page: Option<PageState> = None;
        let mut text_buf = String::new();
        loop {
            self.buf.clear();
            let event = match reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                // Malformed XML is unrecoverable mid-stream: report once and
                // end the stream.
                Err(e) => {
                    let pos = reader.buffer_position();
                    self.reader = None;
                    return Some(Err(DocumentError {
                        doc_id: format!("<xml byte {pos}>"),
                        message: format!("malformed dump: {e}"),
                    }));
                }
            };
            match event {
                Event::Start(start) => {
                    let name = start.local_name();
                    match name.as_ref() {
                        b"page" => page = Some(PageState::default()),
                        b"revision" => {
                            if let Some(p) = page.as_mut() {
                                p.in_revision = true;
                            }
                        }
                        b"title" => {
                            if let Some(p) = page.as_mut() {
                                p.capture = Capture::Title;
                                text_buf.clear();
                            }
                        }
                        b"text" => {
                            if let Some(p) = page.as_mut() {
                                if p.in_revision {
                                    p.capture = Capture::Text;
                                    text_buf.clear();
                                }
                            }
                        }
                        _ => {}
                    }
                }
                Event::Text(t) => {
                    if page.as_ref().is_some_and(|p| p.capture != Capture::None) {
                        match t.unescape() {
                            Ok(s) => text_buf.push_str(&s),
                            Err(_) => text_buf.push_str(&String::from_utf8_lossy(t.as_ref())),
                        }
                    }
                }
                Event::CData(c) => {
                    if page.as_ref().is_some_and(|p| p.capture != Capture::None) {
                        text_buf.push_str(&String::from_utf8_lossy(c.as_ref()));
                    }
                }
                Event::End(end) => {
                    let name = end.local_name();
                    match name.as_ref() {
                        b"title" => {
                            if let Some(p) = page.as_mut() {
                                if p.capture == Capture::Title {
                                    p.title = Some(text_buf.clone());
                                    p.capture = Capture::None;
                                }
                            }
                        }
                        b"text" => {
                            if let Some(p) = page.as_mut() {
                                if p.capture == Capture::Text {
                                    // Later revisions overwrite earlier ones.
                                    p.revision_text = Some(text_buf.clone());
                                    p.capture = Capture::None;
                                }
                            }
                        }
                        b"revision" => {
                            if let Some(p) = page.as_mut() {
                                p.in_revision = false;
                            }
                        }
                        b"page" => {
                            if let Some(p) = page.take() {
                                match (p.title, p.revision_text) {
                                    (Some(title), Some(text)) => {
                                        return Some(Ok(RawDoc {
                                            doc_id: title,
                                            text: strip_wikitext(&text),
                                        }));
                                    }
                                    _ => self.stats.count_skipped(),
                                }
                            }
                        }
                        _ => {}
                    }
                }
                Event::Eof => {
                    self.reader = None;
                    return None;
                }
                _ => {}
            }
        }
    }
}
