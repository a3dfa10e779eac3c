//! Building and reopening the on-disk index: the chunk store plus one
//! auxiliary citation index per document under `aux/<doc_id>/`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::chain::AuxDir;
use crate::citation::{build_auxiliary_index, AuxIndex, CitationError};
use crate::embed::{EmbedError, Embedder};
use crate::ingest::{IngestReport, Ingested};
use crate::store::{ChunkRecord, StoreError, VectorStore};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("embedding `{doc_id}`: {source}")]
    Embed {
        doc_id: String,
        #[source]
        source: EmbedError,
    },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Citation(#[from] CitationError),
}

pub struct BuiltIndex {
    pub store: VectorStore,
    pub aux: HashMap<String, Arc<AuxIndex>>,
    /// Source file name per document, for the aux headers.
    pub sources: HashMap<String, String>,
    pub report: IngestReport,
}

/// Embeds every chunk of `ingested` into a fresh store.
///
/// With `with_aux`, also builds each document's auxiliary index; documents
/// the auxiliary builder rejects (e.g. empty ones) are logged and skipped.
pub fn build_index(ingested: Ingested, embedder: &dyn Embedder, with_aux: bool) -> Result<BuiltIndex, IndexError> {
    let store = VectorStore::new(embedder.dim());
    let mut aux = HashMap::new();
    let mut sources = HashMap::new();
    for doc in &ingested.documents {
        let source = doc.document.source_name();
        if !doc.chunks.is_empty() {
            let texts: Vec<String> = doc.chunks.iter().map(|c| c.text.clone()).collect();
            let vectors = embedder.embed(&texts).map_err(|source| IndexError::Embed {
                doc_id: doc.document.doc_id.clone(),
                source,
            })?;
            let records = doc
                .chunks
                .iter()
                .zip(vectors)
                .map(|(c, v)| ChunkRecord::from_chunk(c, v, &source))
                .collect();
            store.upsert(records)?;
        }
        if with_aux {
            match build_auxiliary_index(&doc.document, embedder) {
                Ok(a) => {
                    aux.insert(doc.document.doc_id.clone(), Arc::new(a));
                }
                Err(CitationError::EmptyDocument(id)) => log::warn!("{id} is empty; no auxiliary index"),
                Err(e) => return Err(e.into()),
            }
        }
        sources.insert(doc.document.doc_id.clone(), source);
    }
    Ok(BuiltIndex {
        store,
        aux,
        sources,
        report: ingested.report,
    })
}

impl BuiltIndex {
    pub fn persist(&self, dir: &Path) -> Result<(), IndexError> {
        self.store.persist(dir)?;
        for (doc_id, a) in &self.aux {
            let source = self.sources.get(doc_id).map_or(doc_id.as_str(), String::as_str);
            a.persist(&AuxDir::dir_for(dir, doc_id), source)?;
        }
        Ok(())
    }
}

/// Reopens a persisted index; auxiliary indexes load lazily.
pub fn open_index(dir: &Path, expected_dim: Option<usize>) -> Result<(VectorStore, AuxDir), IndexError> {
    let store = match expected_dim {
        Some(d) => VectorStore::open_expecting(dir, d)?,
        None => VectorStore::open(dir)?,
    };
    Ok((store, AuxDir::new(dir)))
}

/// Directory of one sweep row's store.
pub fn row_dir(root: &Path, axis: &str, value: usize) -> PathBuf {
    root.join(format!("{axis}-{value}"))
}
