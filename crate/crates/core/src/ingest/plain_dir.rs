//! Directory-of-text-files corpus reader.

use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use super::{DocumentError, RawDoc};

enum Entry {
    File(PathBuf),
    // Unreadable directory entries become per-document errors so the rest
    // of the walk still happens.
    WalkError(String),
}

/// Walk `root` recursively, keep files whose extension matches one of
/// `extensions` (case-insensitive), and yield them in lexicographic order of
/// their relative path. The document id is the relative path with `/`
/// separators.
pub(super) fn read(
    root: &Path,
    extensions: &[String],
) -> impl Iterator<Item = Result<RawDoc, DocumentError>> + Send {
    let mut entries: Vec<(String, Entry)> = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                let id = e
                    .path()
                    .map(|p| p.display().to_string())
                    .unwrap_or_else(|| root.display().to_string());
                entries.push((id.clone(), Entry::WalkError(id)));
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let matches_ext = entry
            .path()
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| {
                let e = e.to_ascii_lowercase();
                extensions.iter().any(|allowed| allowed == &e)
            })
            .unwrap_or(false);
        if !matches_ext {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(root)
            .unwrap_or(entry.path())
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        entries.push((rel, Entry::File(entry.into_path())));
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0));

    entries.into_iter().map(|(doc_id, entry)| match entry {
        Entry::WalkError(path) => Err(DocumentError {
            doc_id: path,
            message: "unreadable directory entry".to_string(),
        }),
        Entry::File(path) => match std::fs::read_to_string(&path) {
            Ok(text) => Ok(RawDoc { doc_id, text }),
            Err(e) => Err(DocumentError {
                doc_id,
                message: format!("unreadable file: {e}"),
            }),
        },
    })
}

#[cfg(test)]
mod tests {
    use crate::ingest::{read_corpus, CorpusFormat, IngestOptions, UnitMode};
    use std::fs;

    #[test]
    fn lexicographic_order_and_extension_filter() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("b.txt"), "Bravo\n").unwrap();
        fs::write(dir.path().join("a.txt"), "Alpha\n").unwrap();
        fs::write(dir.path().join("c.md"), "ignored\n").unwrap();
        fs::write(dir.path().join("sub/z.txt"), "Zulu\n").unwrap();

        let reader = read_corpus(
            dir.path(),
            IngestOptions::new(CorpusFormat::PlainDir, UnitMode::Line),
        )
        .unwrap();
        let ids: Vec<String> = reader.map(|d| d.unwrap().doc_id).collect();
        assert_eq!(ids, vec!["a.txt", "b.txt", "sub/z.txt"]);
    }

    #[test]
    fn invalid_utf8_is_a_document_error_not_a_stop() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), b"ok\n").unwrap();
        fs::write(dir.path().join("bad.txt"), [0xff, 0xfe, 0x00]).unwrap();
        fs::write(dir.path().join("c.txt"), b"also ok\n").unwrap();

        let reader = read_corpus(
            dir.path(),
            IngestOptions::new(CorpusFormat::PlainDir, UnitMode::Line),
        )
        .unwrap();
        let results: Vec<_> = reader.collect();
        assert_eq!(results.len(), 3);
        assert!(results[0].is_ok());
        assert!(results[1].is_err());
        assert!(results[2].is_ok());
    }

    #[test]
    fn missing_path_is_fatal() {
        let err = read_corpus(
            "/definitely/not/here",
            IngestOptions::new(CorpusFormat::PlainDir, UnitMode::Line),
        );
        assert!(err.is_err());
    }
}
