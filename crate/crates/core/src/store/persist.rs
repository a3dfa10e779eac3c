//! Directory layout:
//!
//! - `header.json`: `{dimension, record_count, format_version, checksum}`
//! - `records.jsonl`: one record per line, without the embedding
//! - `matrix.bin`: embeddings as little-endian `f32`, row-major, in record order
//!
//! The checksum is the SHA-256 of `records.jsonl` followed by `matrix.bin`.
//! The header is written last.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChunkRecord, StoreError};
use crate::embed::EmbeddingVector;

pub const FORMAT_VERSION: u32 = 1;

const HEADER: &str = "header.json";
const RECORDS: &str = "records.jsonl";
const MATRIX: &str = "matrix.bin";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dimension: usize,
    record_count: usize,
    format_version: u32,
    checksum: String,
}

#[derive(Serialize, Deserialize)]
struct RecordLine {
    chunk_id: String,
    doc_id: String,
    text: String,
    start_offset: usize,
    end_offset: usize,
    metadata: BTreeMap<String, String>,
}

fn io(path: &Path, e: std::io::Error) -> StoreError {
    StoreError::Io(format!("{}: {e}", path.display()))
}

fn checksum(records: &[u8], matrix: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(records);
    h.update(matrix);
    format!("sha256:{}", hex::encode(h.finalize()))
}

pub(super) fn write(dir: &Path, dim: usize, records: &[Arc<ChunkRecord>]) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut lines = Vec::new();
    let mut matrix = Vec::with_capacity(records.len() * dim * 4);
    for r in records {
        let line = RecordLine {
            chunk_id: r.chunk_id.clone(),
            doc_id: r.doc_id.clone(),
            text: r.text.clone(),
            start_offset: r.start_offset,
            end_offset: r.end_offset,
            metadata: r.metadata.clone(),
        };
        serde_json::to_writer(&mut lines, &line).map_err(|e| StoreError::Io(e.to_string()))?;
        lines.push(b'\n');
        for v in r.embedding.values() {
            matrix.extend_from_slice(&v.to_le_bytes());
        }
    }
    let header = Header {
        dimension: dim,
        record_count: records.len(),
        format_version: FORMAT_VERSION,
        checksum: checksum(&lines, &matrix),
    };
    let put = |name: &str, bytes: &[u8]| {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| io(&path, e))
    };
    put(RECORDS, &lines)?;
    put(MATRIX, &matrix)?;
    let header = serde_json::to_vec_pretty(&header).map_err(|e| StoreError::Io(e.to_string()))?;
    put(HEADER, &header)
}

pub(super) fn read(dir: &Path, expected_dim: Option<usize>) -> Result<(usize, Vec<ChunkRecord>), StoreError> {
    let get = |name: &str| {
        let path = dir.join(name);
        fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound if name != HEADER => StoreError::CorruptStore(format!("missing {name}")),
            _ => io(&path, e),
        })
    };
    let header: Header = serde_json::from_slice(&get(HEADER)?)
        .map_err(|e| StoreError::CorruptStore(format!("unreadable header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(StoreError::CorruptStore(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    if header.dimension == 0 {
        return Err(StoreError::CorruptStore("dimension is zero".into()));
    }
    if let Some(expected) = expected_dim {
        if expected != header.dimension {
            return Err(StoreError::DimensionHeaderMismatch {
                expected,
                found: header.dimension,
            });
        }
    }
    let lines = get(RECORDS)?;
    let matrix = get(MATRIX)?;
    if checksum(&lines, &matrix) != header.checksum {
        return Err(StoreError::CorruptStore("checksum mismatch".into()));
    }
    let dim = header.dimension;
    if matrix.len() != header.record_count * dim * 4 {
        return Err(StoreError::CorruptStore(format!(
            "matrix holds {} bytes, expected {}",
            matrix.len(),
            header.record_count * dim * 4
        )));
    }
    let text = std::str::from_utf8(&lines).map_err(|e| StoreError::CorruptStore(e.to_string()))?;
    let parsed: Vec<RecordLine> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| StoreError::CorruptStore(format!("bad record: {e}"))))
        .collect::<Result<_, _>>()?;
    if parsed.len() != header.record_count {
        return Err(StoreError::CorruptStore(format!(
            "header says {} records, found {}",
            header.record_count,
            parsed.len()
        )));
    }
    let records = parsed
        .into_iter()
        .zip(matrix.chunks_exact(dim * 4))
        .map(|(line, row)| {
            let values = row
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            let embedding = EmbeddingVector::new(values)
                .map_err(|_| StoreError::CorruptStore(format!("bad vector for {}", line.chunk_id)))?;
            Ok(ChunkRecord {
                chunk_id: line.chunk_id,
                doc_id: line.doc_id,
                text: line.text,
                start_offset: line.start_offset,
                end_offset: line.end_offset,
                embedding,
                metadata: line.metadata,
            })
        })
        .collect::<Result<_, StoreError>>()?;
    Ok((dim, records))
}
