//! In-memory vector store with exact search, MMR re-ranking and on-disk persistence.

mod metric;
mod mmr;
mod persist;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::embed::EmbeddingVector;
use crate::ingest::Chunk;

pub use metric::{similarity, Metric};
pub use mmr::{mmr_rank, MmrParams};
pub use persist::FORMAT_VERSION;

/// Metadata key every record must carry.
pub const SOURCE_KEY: &str = "source";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StoreError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cosine is undefined for a zero vector")]
    ZeroVector,
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("store is empty")]
    EmptyStore,
    #[error("lambda must lie in [0, 1], got {0}")]
    InvalidLambda(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("record `{0}` has no `source` metadata")]
    MissingSource(String),
    #[error("store directory: {0}")]
    Io(String),
    #[error("corrupt store: {0}")]
    CorruptStore(String),
    #[error("store holds {found}-dim vectors but {expected} were expected")]
    DimensionHeaderMismatch { expected: usize, found: usize },
}

/// A stored chunk together with its embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkRecord {
    pub chunk_id: String,
    pub doc_id: String,
    pub text: String,
    pub start_offset: usize,
    pub end_offset: usize,
    pub embedding: EmbeddingVector,
    pub metadata: BTreeMap<String, String>,
}

impl ChunkRecord {
    pub fn from_chunk(chunk: &Chunk, embedding: EmbeddingVector, source: &str) -> Self {
        Self {
            chunk_id: chunk.chunk_id.clone(),
            doc_id: chunk.doc_id.clone(),
            text: chunk.text.clone(),
            start_offset: chunk.start_offset,
            end_offset: chunk.end_offset,
            embedding,
            metadata: BTreeMap::from([(SOURCE_KEY.to_owned(), source.to_owned())]),
        }
    }

    pub fn source(&self) -> Option<&str> {
        self.metadata.get(SOURCE_KEY).map(String::as_str)
    }

    /// Offsets are unknown when the record spans no characters.
    pub fn has_offsets(&self) -> bool {
        self.end_offset > self.start_offset
    }
}

/// A retrieved record and its raw metric value against the query.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRecord {
    pub record: Arc<ChunkRecord>,
    pub score: f64,
}

impl Serialize for ScoredRecord {
    // Embeddings are left out; they are large and rarely useful in reports.
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let r = &self.record;
        let mut s = serializer.serialize_struct("ScoredRecord", 7)?;
        s.serialize_field("chunk_id", &r.chunk_id)?;
        s.serialize_field("doc_id", &r.doc_id)?;
        s.serialize_field("source", &r.source())?;
        s.serialize_field("start_offset", &r.start_offset)?;
        s.serialize_field("end_offset", &r.end_offset)?;
        s.serialize_field("score", &self.score)?;
        s.serialize_field("text", &r.text)?;
        s.end()
    }
}

#[derive(Debug, Default)]
struct Inner {
    records: Vec<Arc<ChunkRecord>>,
    by_id: HashMap<String, usize>,
}

/// Fixed-dimension record store. Readers run concurrently; upserts take an
/// exclusive lock.
#[derive(Debug)]
pub struct VectorStore {
    dim: usize,
    inner: RwLock<Inner>,
}

impl VectorStore {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "store dimension must be positive");
        Self {
            dim,
            inner: RwLock::default(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, Inner> {
        self.inner.read().unwrap_or_else(|p| p.into_inner())
    }

    pub fn len(&self) -> usize {
        self.read().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inserts records, replacing any with the same `chunk_id`. Returns the
    /// number of records written. The whole batch is validated first.
    pub fn upsert(&self, records: Vec<ChunkRecord>) -> Result<usize, StoreError> {
        for r in &records {
            if r.embedding.dim() != self.dim {
                return Err(StoreError::DimensionMismatch {
                    expected: self.dim,
                    got: r.embedding.dim(),
                });
            }
            if r.source().is_none() {
                return Err(StoreError::MissingSource(r.chunk_id.clone()));
            }
        }
        let n = records.len();
        let mut inner = self.inner.write().unwrap_or_else(|p| p.into_inner());
        for r in records {
            match inner.by_id.get(&r.chunk_id) {
                Some(&i) => inner.records[i] = Arc::new(r),
                None => {
                    let i = inner.records.len();
                    inner.by_id.insert(r.chunk_id.clone(), i);
                    inner.records.push(Arc::new(r));
                }
            }
        }
        Ok(n)
    }

    pub fn get(&self, chunk_id: &str) -> Option<Arc<ChunkRecord>> {
        let inner = self.read();
        inner.by_id.get(chunk_id).map(|&i| Arc::clone(&inner.records[i]))
    }

    /// Snapshot of all records in insertion order.
    pub fn records(&self) -> Vec<Arc<ChunkRecord>> {
        self.read().records.clone()
    }

    fn check_query(&self, query: &EmbeddingVector) -> Result<(), StoreError> {
        if query.dim() != self.dim {
            return Err(StoreError::DimensionMismatch {
                expected: self.dim,
                got: query.dim(),
            });
        }
        Ok(())
    }

    /// Exact nearest records, best first. Ties go to the lower `chunk_id`.
    pub fn top_k(&self, query: &EmbeddingVector, k: usize, metric: Metric) -> Result<Vec<ScoredRecord>, StoreError> {
        self.check_query(query)?;
        metric.validate()?;
        if k == 0 {
            return Err(StoreError::InvalidParams("k must be positive".into()));
        }
        let records = self.records();
        if records.is_empty() {
            return Err(StoreError::EmptyStore);
        }
        rank(query, records, k, metric)
    }

    /// Fetches `fetch_n` candidates by `sim1`, then re-ranks them with MMR.
    pub fn mmr_select(&self, query: &EmbeddingVector, params: &MmrParams) -> Result<Vec<ScoredRecord>, StoreError> {
        params.validate()?;
        let candidates = self.top_k(query, params.fetch_n, params.sim1)?;
        let candidates: Vec<_> = candidates.into_iter().map(|s| s.record).collect();
        mmr_rank(query, &candidates, params)
    }

    pub fn persist(&self, dir: &Path) -> Result<(), StoreError> {
        let inner = self.read();
        persist::write(dir, self.dim, &inner.records)
    }

    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        let (dim, records) = persist::read(dir, None)?;
        Self::from_records(dim, records)
    }

    /// Opens a store, failing if it was built with a different dimension.
    pub fn open_expecting(dir: &Path, dim: usize) -> Result<Self, StoreError> {
        let (dim, records) = persist::read(dir, Some(dim))?;
        Self::from_records(dim, records)
    }

    fn from_records(dim: usize, records: Vec<ChunkRecord>) -> Result<Self, StoreError> {
        let store = Self::new(dim);
        store.upsert(records)?;
        Ok(store)
    }
}

/// Exact ranking of `records` by `metric`, best first, ties to the lower `chunk_id`.
pub(crate) fn rank(
    query: &EmbeddingVector,
    records: Vec<Arc<ChunkRecord>>,
    k: usize,
    metric: Metric,
) -> Result<Vec<ScoredRecord>, StoreError> {
    let mut scored = records
        .into_iter()
        .map(|record| {
            let score = similarity(query, &record.embedding, metric)?;
            Ok(ScoredRecord { record, score })
        })
        .collect::<Result<Vec<_>, StoreError>>()?;
    scored.sort_by(|a, b| {
        metric
            .preference(b.score)
            .total_cmp(&metric.preference(a.score))
            .then_with(|| a.record.chunk_id.cmp(&b.record.chunk_id))
    });
    scored.truncate(k);
    Ok(scored)
}
