//! Citation grounding.
//!
//! For every retrieved chunk the source document is re-split into a handful of
//! large "expanded" chunks ([`AuxIndex`]). The expanded chunk covering the
//! retrieved one is scanned for in-text citation markers, which are resolved
//! against the document's own reference section. The resulting citation list
//! is what the model is allowed to cite, and [`verify_answer_citations`]
//! checks the answer against it afterwards.

mod aux;
mod markers;
mod names;
mod references;
mod resolve;
mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbedError;
use crate::ingest::Span;
use crate::store::StoreError;

pub use aux::{build_auxiliary_index, expanded_spans, locate_expanded_chunk, AuxIndex};
pub use markers::{extract_citation_markers, extract_with, PatternKind, DEFAULT_PATTERNS};
pub use references::{extract_reference_section, parse_reference_entries};
pub use resolve::{resolve_citations, Resolution};
pub use verify::{
    extract_answer_citations, verify_answer_citations, AnswerCitation, FlagReason, FlaggedCitation, VerificationReport,
    VerifiedCitation,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CitationError {
    #[error("document `{0}` has no reference section")]
    NoReferenceSection(String),
    #[error("no expanded chunk of `{doc_id}` contains offsets [{start}, {end}); the index is stale")]
    NoContainingChunk { doc_id: String, start: usize, end: usize },
    #[error("chunk belongs to `{got}`, index is for `{expected}`")]
    DocumentMismatch { expected: String, got: String },
    #[error("document `{0}` is empty")]
    EmptyDocument(String),
    #[error("embedding failed: {0}")]
    EmbeddingFailed(#[from] EmbedError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("no auxiliary index for `{0}`; re-run ingest")]
    NoAuxIndex(String),
    #[error("auxiliary index: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkerKind {
    Numeric,
    AuthorYear,
}

/// Kind, numbers, folded author names and year.
pub type MarkerKey = (MarkerKind, Vec<u32>, Vec<String>, Option<u16>);

/// One cited work as it appears in running text.
///
/// Bracket groups are split up: `[25, 26]` yields one marker for 25 and one
/// for 26, both spanning the whole group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationMarker {
    pub kind: MarkerKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub numbers: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub authors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<u16>,
    /// Character offsets into the scanned text.
    pub span: Span,
}

impl CitationMarker {
    pub fn numeric(n: u32, span: Span) -> Self {
        Self {
            kind: MarkerKind::Numeric,
            numbers: vec![n],
            authors: Vec::new(),
            year: None,
            span,
        }
    }

    pub fn author_year(authors: Vec<String>, year: u16, span: Span) -> Self {
        Self {
            kind: MarkerKind::AuthorYear,
            numbers: Vec::new(),
            authors,
            year: Some(year),
            span,
        }
    }

    /// Identity used for deduplication; ignores the span and folds names.
    pub fn key(&self) -> MarkerKey {
        (
            self.kind,
            self.numbers.clone(),
            self.authors.iter().map(|a| crate::text::fold(a)).collect(),
            self.year,
        )
    }

    pub fn shifted(&self, by: usize) -> Self {
        Self {
            span: Span::new(self.span.start + by, self.span.end + by),
            ..self.clone()
        }
    }
}

impl std::fmt::Display for CitationMarker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            MarkerKind::Numeric => {
                let nums: Vec<String> = self.numbers.iter().map(u32::to_string).collect();
                write!(f, "[{}]", nums.join(", "))
            }
            MarkerKind::AuthorYear => {
                write!(f, "{}", names::format_authors(&self.authors))?;
                if let Some(y) = self.year {
                    write!(f, " ({y})")?;
                }
                Ok(())
            }
        }
    }
}

/// One entry of a document's bibliography.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CitationEntry {
    /// `"26"` for numbered styles, `"Li, Kailasanath & Oran (1994)"` style otherwise.
    pub label: String,
    /// Entry text with whitespace collapsed and the leading label removed.
    pub full_text: String,
    pub doc_id: String,
}

/// `[label] full_text`, one entry per line.
pub fn format_citation_list(entries: &[CitationEntry]) -> String {
    entries
        .iter()
        .map(|e| format!("[{}] {}", e.label, e.full_text))
        .collect::<Vec<_>>()
        .join("\n")
}
