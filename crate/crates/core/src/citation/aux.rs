//! Per-document index of large "expanded" chunks.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{extract_reference_section, CitationEntry, CitationError};
use crate::embed::{Embedder, EmbeddingVector};
use crate::ingest::{Chunk, Document, Span};
use crate::store::{ChunkRecord, Metric, VectorStore};
use crate::text::CharMap;

const TARGET_WIDTH: f64 = 3750.0;
const MAX_WIDTH: usize = 4000;
const MIN_COUNT: usize = 10;
const MAX_COUNT: usize = 11;

const META_FILE: &str = "aux.json";

#[derive(Debug, Clone, PartialEq)]
pub struct AuxIndex {
    pub doc_id: String,
    /// Length of the source body in characters.
    pub doc_len: usize,
    pub expanded_chunks: Vec<Chunk>,
    pub embeddings: Vec<EmbeddingVector>,
    /// Parsed bibliography; `None` when the document has no reference section.
    pub references: Option<Vec<CitationEntry>>,
}

#[derive(Serialize, Deserialize)]
struct AuxMeta {
    doc_id: String,
    doc_len: usize,
    references: Option<Vec<CitationEntry>>,
}

/// Contiguous spans covering `[0, len)`.
///
/// Documents of at least 35,000 characters get `clamp(round(len / 3750), 10, 11)`
/// equal-width chunks. Shorter ones are cut every 4,000 characters, the last
/// chunk taking the remainder.
pub fn expanded_spans(len: usize) -> Vec<Span> {
    if len == 0 {
        return Vec::new();
    }
    let width = if len >= MIN_COUNT * 3500 {
        let count = ((len as f64 / TARGET_WIDTH).round() as usize).clamp(MIN_COUNT, MAX_COUNT);
        len.div_ceil(count)
    } else {
        MAX_WIDTH
    };
    (0..len)
        .step_by(width)
        .map(|start| Span::new(start, (start + width).min(len)))
        .collect()
}

/// Splits `doc` into expanded chunks, embeds them and parses its bibliography.
pub fn build_auxiliary_index(doc: &Document, embedder: &dyn Embedder) -> Result<AuxIndex, CitationError> {
    if doc.body.trim().is_empty() {
        return Err(CitationError::EmptyDocument(doc.doc_id.clone()));
    }
    let map = CharMap::new(&doc.body);
    let expanded_chunks: Vec<Chunk> = expanded_spans(map.len())
        .into_iter()
        .enumerate()
        .map(|(i, s)| Chunk {
            chunk_id: format!("{}~x{:02}", doc.doc_id, i),
            doc_id: doc.doc_id.clone(),
            text: map.slice(&doc.body, s.start, s.end).to_owned(),
            start_offset: s.start,
            end_offset: s.end,
        })
        .collect();
    let texts: Vec<String> = expanded_chunks.iter().map(|c| c.text.clone()).collect();
    let embeddings = embedder.embed(&texts)?;
    let references = match extract_reference_section(doc) {
        Ok(entries) => Some(entries),
        Err(CitationError::NoReferenceSection(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(AuxIndex {
        doc_id: doc.doc_id.clone(),
        doc_len: map.len(),
        expanded_chunks,
        embeddings,
        references,
    })
}

/// The expanded chunk that best covers `original`.
///
/// Uses the largest character overlap, ties going to the earlier chunk. A
/// record without offsets (empty span) falls back to cosine similarity of
/// embeddings.
pub fn locate_expanded_chunk<'a>(aux: &'a AuxIndex, original: &ChunkRecord) -> Result<&'a Chunk, CitationError> {
    if original.doc_id != aux.doc_id {
        return Err(CitationError::DocumentMismatch {
            expected: aux.doc_id.clone(),
            got: original.doc_id.clone(),
        });
    }
    let stale = || CitationError::NoContainingChunk {
        doc_id: aux.doc_id.clone(),
        start: original.start_offset,
        end: original.end_offset,
    };
    if !original.has_offsets() {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in aux.embeddings.iter().enumerate() {
            let s = Metric::Cosine.eval(original.embedding.values(), e.values())?;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        return best.map(|(i, _)| &aux.expanded_chunks[i]).ok_or_else(stale);
    }
    if original.end_offset > aux.doc_len {
        return Err(stale());
    }
    let span = Span::new(original.start_offset, original.end_offset);
    let mut best: Option<(usize, usize)> = None;
    for (i, c) in aux.expanded_chunks.iter().enumerate() {
        let o = c.span().overlap(&span);
        if o > 0 && best.is_none_or(|(_, b)| o > b) {
            best = Some((i, o));
        }
    }
    best.map(|(i, _)| &aux.expanded_chunks[i]).ok_or_else(stale)
}

impl AuxIndex {
    /// Writes the index under `dir` in the vector store format plus `aux.json`.
    pub fn persist(&self, dir: &Path, source: &str) -> Result<(), CitationError> {
        let dim = self.embeddings.first().map_or(1, EmbeddingVector::dim);
        let store = VectorStore::new(dim);
        let records = self
            .expanded_chunks
            .iter()
            .zip(&self.embeddings)
            .map(|(c, e)| ChunkRecord::from_chunk(c, e.clone(), source))
            .collect();
        store.upsert(records)?;
        store.persist(dir)?;
        let meta = AuxMeta {
            doc_id: self.doc_id.clone(),
            doc_len: self.doc_len,
            references: self.references.clone(),
        };
        let json = serde_json::to_vec_pretty(&meta).map_err(|e| CitationError::Io(e.to_string()))?;
        fs::write(dir.join(META_FILE), json).map_err(|e| CitationError::Io(format!("{}: {e}", dir.display())))
    }

    pub fn open(dir: &Path) -> Result<Self, CitationError> {
        let path = dir.join(META_FILE);
        let bytes = fs::read(&path).map_err(|e| CitationError::Io(format!("{}: {e}", path.display())))?;
        let meta: AuxMeta =
            serde_json::from_slice(&bytes).map_err(|e| CitationError::Io(format!("{}: {e}", path.display())))?;
        let store = VectorStore::open(dir)?;
        let mut records = store.records();
        records.sort_by_key(|r| r.start_offset);
        let (expanded_chunks, embeddings) = records
            .iter()
            .map(|r| {
                let chunk = Chunk {
                    chunk_id: r.chunk_id.clone(),
                    doc_id: r.doc_id.clone(),
                    text: r.text.clone(),
                    start_offset: r.start_offset,
                    end_offset: r.end_offset,
                };
                (chunk, r.embedding.clone())
            })
            .unzip();
        Ok(Self {
            doc_id: meta.doc_id,
            doc_len: meta.doc_len,
            expanded_chunks,
            embeddings,
            references: meta.references,
        })
    }
}
