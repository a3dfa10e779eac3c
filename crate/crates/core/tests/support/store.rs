//! Random stores with awkward float bit patterns and text.

use std::collections::BTreeMap;

use litrag::embed::EmbeddingVector;
use litrag::store::{ChunkRecord, VectorStore, SOURCE_KEY};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const STORE_FILES: [&str; 3] = ["header.json", "records.jsonl", "matrix.bin"];

pub fn random_store(seed: u64, n: usize) -> VectorStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.random_range(1..=48);
    let store = VectorStore::new(dim);
    let records = (0..n)
        .map(|i| {
            let values: Vec<f32> = (0..dim)
                .map(|_| {
                    // Full-width mantissas, plus signed zeros and tiny subnormal-adjacent values.
                    match rng.random_range(0..20) {
                        0 => -0.0,
                        1 => f32::MIN_POSITIVE * rng.random_range(1.0f32..2.0),
                        _ => rng.random_range(-1.0e3f32..1.0e3),
                    }
                })
                .collect();
            let start = rng.random_range(0..10_000);
            let text: String = (0..rng.random_range(0..80))
                .map(|_| ['a', 'é', ' ', '\n', '"', '\\', 'λ', '→', 'Z'][rng.random_range(0..9)])
                .collect();
            ChunkRecord {
                chunk_id: format!("doc{}#{i:05}", i % 7),
                doc_id: format!("doc{}", i % 7),
                end_offset: start + text.chars().count(),
                text,
                start_offset: start,
                embedding: EmbeddingVector::new(values).unwrap(),
                metadata: BTreeMap::from([
                    (SOURCE_KEY.to_owned(), format!("doc{}.txt", i % 7)),
                    ("rank".to_owned(), i.to_string()),
                ]),
            }
        })
        .collect();
    store.upsert(records).unwrap();
    store
}

pub fn matrix_digest(store: &VectorStore) -> [u8; 32] {
    let mut h = Sha256::new();
    for r in store.records() {
        for v in r.embedding.values() {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    h.finalize().into()
}
