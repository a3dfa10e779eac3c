//! Corpus ingestion: load plain-text documents and cut them into chunks.

mod split;

use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use split::{recursive_split, split_spans, Span, SplitError, SplitParams, DEFAULT_SEPARATORS};

use crate::text::{char_len, normalize_newlines, CharMap};

/// Headings that open a bibliography, matched case-insensitively on a line of their own.
pub const REFERENCE_HEADINGS: [&str; 3] = ["references", "bibliography", "literature cited"];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    FileUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not plain text and no extractor command is configured")]
    NoExtractor { path: PathBuf },
    #[error("extractor failed on {path}: {message}")]
    ExtractorFailed { path: PathBuf, message: String },
    #[error("{path} is empty after extraction")]
    EmptyDocument { path: PathBuf },
    #[error("cannot read directory {path}: {source}")]
    DirectoryUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Split(#[from] SplitError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    pub source_path: PathBuf,
    /// Character span of the bibliography, heading line included.
    pub reference_section: Option<Span>,
}

impl Document {
    /// Builds a document from text already in memory.
    pub fn from_text(doc_id: impl Into<String>, source_path: impl Into<PathBuf>, text: &str) -> Self {
        let body = normalize_newlines(text);
        let title = body
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .unwrap_or_default()
            .to_owned();
        let reference_section = locate_reference_section(&body);
        Self {
            doc_id: doc_id.into(),
            title,
            body,
            source_path: source_path.into(),
            reference_section,
        }
    }

    /// File name of the source, used as the document name in prompts.
    pub fn source_name(&self) -> String {
        self.source_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.doc_id.clone())
    }

    pub fn char_len(&self) -> usize {
        char_len(&self.body)
    }

    /// Text of the reference section, heading included.
    pub fn reference_text(&self) -> Option<&str> {
        let span = self.reference_section?;
        Some(CharMap::new(&self.body).slice(&self.body, span.start, span.end))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_id: String,
    pub text: String,
    pub start_offset: usize,
    pub end_offset: usize,
}

impl Chunk {
    /// `doc_id#00042`; zero padding keeps lexical order equal to document order.
    pub fn make_id(doc_id: &str, ordinal: usize) -> String {
        format!("{doc_id}#{ordinal:05}")
    }

    pub fn span(&self) -> Span {
        Span::new(self.start_offset, self.end_offset)
    }
}

/// Finds the last standalone heading line naming a bibliography.
///
/// Tolerates a leading section number or markdown hashes and a trailing colon,
/// e.g. `7. References` or `## Bibliography:`.
pub fn locate_reference_section(body: &str) -> Option<Span> {
    let map = CharMap::new(body);
    let mut found = None;
    let mut byte = 0;
    for line in body.split_inclusive('\n') {
        if is_reference_heading(line) {
            found = Some(byte);
        }
        byte += line.len();
    }
    let start = map.char_at_byte(found?);
    Some(Span::new(start, map.len()))
}

pub(crate) fn is_reference_heading(line: &str) -> bool {
    let trimmed = line
        .trim()
        .trim_start_matches('#')
        .trim_start_matches(|c: char| c.is_ascii_digit() || c == '.' || c.is_whitespace())
        .trim_end_matches(':')
        .trim();
    REFERENCE_HEADINGS.iter().any(|h| trimmed.eq_ignore_ascii_case(h))
}

/// Derives a stable id from the file stem: lowercase, path-safe characters only.
pub fn doc_id_from_path(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "document".to_owned());
    let id: String = stem
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    if id.is_empty() {
        "document".to_owned()
    } else {
        id
    }
}

fn is_plain_text(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref(),
        Some("txt") | Some("text") | Some("md")
    )
}

/// Runs an extractor command template such as `pdftotext {path} -`.
fn run_extractor(template: &str, path: &Path) -> Result<String, IngestError> {
    let path_str = path.to_string_lossy();
    let mut parts = template.split_whitespace().map(|p| p.replace("{path}", &path_str));
    let program = parts.next().ok_or_else(|| IngestError::ExtractorFailed {
        path: path.to_owned(),
        message: "empty extractor command".into(),
    })?;
    let output = Command::new(&program)
        .args(parts)
        .output()
        .map_err(|e| IngestError::ExtractorFailed {
            path: path.to_owned(),
            message: format!("cannot run {program}: {e}"),
        })?;
    if !output.status.success() {
        return Err(IngestError::ExtractorFailed {
            path: path.to_owned(),
            message: format!(
                "{program} exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            ),
        });
    }
    String::from_utf8(output.stdout).map_err(|e| IngestError::ExtractorFailed {
        path: path.to_owned(),
        message: format!("extractor output is not UTF-8: {e}"),
    })
}

/// Loads one document. Non-text files need an extractor command template.
pub fn load_document(path: &Path, extractor: Option<&str>) -> Result<Document, IngestError> {
    let raw = if is_plain_text(path) {
        std::fs::read_to_string(path).map_err(|source| IngestError::FileUnreadable {
            path: path.to_owned(),
            source,
        })?
    } else {
        // Surface unreadable files before complaining about the extractor.
        std::fs::metadata(path).map_err(|source| IngestError::FileUnreadable {
            path: path.to_owned(),
            source,
        })?;
        match extractor {
            Some(template) => run_extractor(template, path)?,
            None => return Err(IngestError::NoExtractor { path: path.to_owned() }),
        }
    };
    if raw.trim().is_empty() {
        return Err(IngestError::EmptyDocument { path: path.to_owned() });
    }
    Ok(Document::from_text(doc_id_from_path(path), path, &raw))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentReport {
    pub doc_id: String,
    pub path: PathBuf,
    pub chars: usize,
    pub chunk_count: usize,
    pub has_reference_section: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestFailure {
    pub path: PathBuf,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub documents: Vec<DocumentReport>,
    pub total_chunks: usize,
    pub failures: Vec<IngestFailure>,
}

/// A loaded document and its chunks.
#[derive(Debug, Clone)]
pub struct IngestedDocument {
    pub document: Document,
    pub chunks: Vec<Chunk>,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub report: IngestReport,
    pub documents: Vec<IngestedDocument>,
}

/// Loads and splits every file directly inside `dir`, in file-name order.
///
/// Per-file failures are recorded in the report and do not stop the batch.
/// Two files with the same stem get `_2`, `_3`, ... suffixes on their ids.
pub fn ingest_corpus(dir: &Path, params: &SplitParams, extractor: Option<&str>) -> Result<Ingested, IngestError> {
    params.validate()?;
    let unreadable = |source| IngestError::DirectoryUnreadable {
        path: dir.to_owned(),
        source,
    };
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(unreadable)? {
        let entry = entry.map_err(unreadable)?;
        let path = entry.path();
        // Broken symlinks are kept so they surface as per-file failures.
        if path.is_dir() {
            continue;
        }
        if path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'))
        {
            continue;
        }
        paths.push(path);
    }
    paths.sort();

    let loaded: Vec<Result<IngestedDocument, IngestFailure>> = paths
        .par_iter()
        .map(|path| {
            let fail = |e: IngestError| IngestFailure {
                path: path.clone(),
                error: e.to_string(),
            };
            let document = load_document(path, extractor).map_err(fail)?;
            let chunks = recursive_split(&document.doc_id, &document.body, params).map_err(|e| fail(e.into()))?;
            Ok(IngestedDocument { document, chunks })
        })
        .collect();

    let mut out = Ingested::default();
    let mut seen = std::collections::HashMap::<String, usize>::new();
    for item in loaded {
        match item {
            Ok(mut doc) => {
                let n = seen.entry(doc.document.doc_id.clone()).or_insert(0);
                *n += 1;
                if *n > 1 {
                    let id = format!("{}_{}", doc.document.doc_id, n);
                    doc = IngestedDocument {
                        chunks: recursive_split(&id, &doc.document.body, params)?,
                        document: Document {
                            doc_id: id,
                            ..doc.document
                        },
                    };
                }
                out.report.total_chunks += doc.chunks.len();
                out.report.documents.push(DocumentReport {
                    doc_id: doc.document.doc_id.clone(),
                    path: doc.document.source_path.clone(),
                    chars: doc.document.char_len(),
                    chunk_count: doc.chunks.len(),
                    has_reference_section: doc.document.reference_section.is_some(),
                });
                out.documents.push(doc);
            }
            Err(failure) => out.report.failures.push(failure),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heading_detection() {
        assert!(is_reference_heading("References\n"));
        assert!(is_reference_heading("  REFERENCES:  "));
        assert!(is_reference_heading("7. References"));
        assert!(is_reference_heading("## Bibliography"));
        assert!(is_reference_heading("Literature Cited"));
        assert!(!is_reference_heading("References are listed below."));
        assert!(!is_reference_heading("See the references"));
    }

    #[test]
    fn last_heading_wins() {
        let body = "Intro\nReferences\nmentioned early\n\nReferences\n1. A. B. Title.\n";
        let span = locate_reference_section(body).unwrap();
        let text = crate::text::slice_chars(body, span.start, span.end).unwrap();
        assert!(text.starts_with("References\n1. A."));
        assert_eq!(span.end, body.chars().count());
    }

    #[test]
    fn no_heading() {
        assert_eq!(locate_reference_section("one\n\ntwo\n\nthree"), None);
    }

    #[test]
    fn crlf_is_normalized() {
        let doc = Document::from_text("d", "d.txt", "Title\r\nline\rend");
        assert_eq!(doc.body, "Title\nline\nend");
        assert_eq!(doc.title, "Title");
    }

    #[test]
    fn ids_from_paths() {
        assert_eq!(doc_id_from_path(Path::new("/x/Li et al 1994.txt")), "li_et_al_1994");
        assert_eq!(doc_id_from_path(Path::new("paper-2.pdf")), "paper-2");
    }
}
