//! Recursive separator-driven splitting with character offsets.
//!
//! The body is split on the first separator of the hierarchy that occurs in
//! it. Pieces that fit are merged greedily into windows of at most
//! `chunk_size` characters; oversized pieces are split again with the
//! separators that follow. When a window is emitted, pieces are dropped from
//! its front until what remains is no longer than `chunk_overlap` and leaves
//! room for the next piece. The retained tail becomes the overlap of the
//! next chunk, so overlap always falls on a separator boundary.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Chunk;
use crate::text::CharMap;

/// Blank line, newline, sentence end, space, then single characters.
pub const DEFAULT_SEPARATORS: [&str; 5] = ["\n\n", "\n", ". ", " ", ""];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SplitError {
    #[error("invalid split parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitParams {
    pub chunk_size: usize,
    pub chunk_overlap: usize,
    pub separators: Vec<String>,
}

impl Default for SplitParams {
    fn default() -> Self {
        Self {
            chunk_size: 700,
            chunk_overlap: 200,
            separators: DEFAULT_SEPARATORS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl SplitParams {
    /// Parameters with the default separator hierarchy, validated.
    pub fn new(chunk_size: usize, chunk_overlap: usize) -> Result<Self, SplitError> {
        let params = Self {
            chunk_size,
            chunk_overlap,
            ..Self::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_separators<S: Into<String>>(
        mut self,
        separators: impl IntoIterator<Item = S>,
    ) -> Result<Self, SplitError> {
        self.separators = separators.into_iter().map(Into::into).collect();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SplitError> {
        if self.chunk_size == 0 {
            return Err(SplitError::InvalidParams("chunk_size must be positive".into()));
        }
        if self.chunk_overlap >= self.chunk_size {
            return Err(SplitError::InvalidParams(format!(
                "chunk_overlap ({}) must be smaller than chunk_size ({})",
                self.chunk_overlap, self.chunk_size
            )));
        }
        match self.separators.last() {
            None => Err(SplitError::InvalidParams("separator list is empty".into())),
            Some(last) if !last.is_empty() => Err(SplitError::InvalidParams(
                "separator list must end with the empty separator".into(),
            )),
            Some(_) => Ok(()),
        }
    }

    /// Overlap as a percentage of the chunk size.
    pub fn overlap_ratio_pct(&self) -> f64 {
        100.0 * self.chunk_overlap as f64 / self.chunk_size as f64
    }
}

/// Half-open character span `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Length of the intersection with `other`.
    pub fn overlap(&self, other: &Span) -> usize {
        self.end.min(other.end).saturating_sub(self.start.max(other.start))
    }
}

/// Splits `body` into chunk spans (character offsets).
pub fn split_spans(body: &str, params: &SplitParams) -> Result<Vec<Span>, SplitError> {
    params.validate()?;
    let chars: Vec<char> = body.chars().collect();
    let splitter = Splitter {
        chars: &chars,
        separators: params.separators.iter().map(|s| s.chars().collect()).collect(),
        size: params.chunk_size,
        overlap: params.chunk_overlap,
    };
    let mut out = Vec::new();
    if !chars.is_empty() {
        splitter.split(0, chars.len(), 0, &mut out);
    }
    Ok(out)
}

/// Splits a document body into ordered, overlapping chunks.
pub fn recursive_split(doc_id: &str, body: &str, params: &SplitParams) -> Result<Vec<Chunk>, SplitError> {
    let spans = split_spans(body, params)?;
    let map = CharMap::new(body);
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(ordinal, span)| Chunk {
            chunk_id: Chunk::make_id(doc_id, ordinal),
            doc_id: doc_id.to_owned(),
            text: map.slice(body, span.start, span.end).to_owned(),
            start_offset: span.start,
            end_offset: span.end,
        })
        .collect())
}

struct Splitter<'a> {
    chars: &'a [char],
    separators: Vec<Vec<char>>,
    size: usize,
    overlap: usize,
}

impl Splitter<'_> {
    fn find(&self, sep: &[char], from: usize, to: usize) -> Option<usize> {
        if sep.len() > to.saturating_sub(from) {
            return None;
        }
        (from..=to - sep.len()).find(|&i| self.chars[i..i + sep.len()] == *sep)
    }

    fn pieces(&self, start: usize, end: usize, sep: &[char]) -> Vec<Span> {
        if sep.is_empty() {
            return (start..end).map(|i| Span::new(i, i + 1)).collect();
        }
        let mut out = Vec::new();
        let mut cursor = start;
        while let Some(hit) = self.find(sep, cursor, end) {
            if hit > cursor {
                out.push(Span::new(cursor, hit));
            }
            cursor = hit + sep.len();
        }
        if cursor < end {
            out.push(Span::new(cursor, end));
        }
        out
    }

    fn split(&self, start: usize, end: usize, first_sep: usize, out: &mut Vec<Span>) {
        // The last separator is always empty, so this always finds one.
        let level = (first_sep..self.separators.len())
            .find(|&i| {
                let sep = &self.separators[i];
                sep.is_empty() || self.find(sep, start, end).is_some()
            })
            .unwrap_or(self.separators.len() - 1);

        let mut fitting = Vec::new();
        for piece in self.pieces(start, end, &self.separators[level]) {
            if piece.len() <= self.size {
                fitting.push(piece);
                continue;
            }
            self.merge(&fitting, out);
            fitting.clear();
            self.split(piece.start, piece.end, level + 1, out);
        }
        self.merge(&fitting, out);
    }

    fn merge(&self, pieces: &[Span], out: &mut Vec<Span>) {
        let mut window: VecDeque<Span> = VecDeque::new();
        let span_of = |w: &VecDeque<Span>| Span::new(w[0].start, w[w.len() - 1].end);
        for &piece in pieces {
            if !window.is_empty() && piece.end - window[0].start > self.size {
                out.push(span_of(&window));
                while !window.is_empty()
                    && (span_of(&window).len() > self.overlap || piece.end - window[0].start > self.size)
                {
                    window.pop_front();
                }
            }
            window.push_back(piece);
        }
        if !window.is_empty() {
            out.push(span_of(&window));
        }
    }
}
