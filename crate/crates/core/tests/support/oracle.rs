//! Brute-force MMR reference and random instances for it.

use std::collections::BTreeMap;
use std::sync::Arc;

use litrag::embed::EmbeddingVector;
use litrag::store::{ChunkRecord, Metric, SOURCE_KEY};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

// Independent reference: every step recomputes the objective from scratch.
pub fn sim(m: Metric, x: &[f32], y: &[f32]) -> f64 {
    let x: Vec<f64> = x.iter().map(|&v| v.into()).collect();
    let y: Vec<f64> = y.iter().map(|&v| v.into()).collect();
    match m {
        Metric::Cosine => {
            let dot: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            let ny = y.iter().map(|b| b * b).sum::<f64>().sqrt();
            (dot / (nx * ny)).clamp(-1.0, 1.0)
        }
        Metric::Euclidean => -x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        _ => unreachable!(),
    }
}

pub fn brute_force_mmr(
    q: &[f32],
    cands: &[Arc<ChunkRecord>],
    lambda: f64,
    k: usize,
    s1: Metric,
    s2: Metric,
) -> Vec<String> {
    let mut selected: Vec<usize> = Vec::new();
    while selected.len() < k.min(cands.len()) {
        let mut best: Option<(f64, &str, usize)> = None;
        for (i, c) in cands.iter().enumerate() {
            if selected.contains(&i) {
                continue;
            }
            let rel = sim(s1, c.embedding.values(), q);
            let red = selected
                .iter()
                .map(|&j| sim(s2, c.embedding.values(), cands[j].embedding.values()))
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
                .unwrap_or(0.0);
            let score = lambda * rel - (1.0 - lambda) * red;
            let wins = match best {
                None => true,
                Some((s, id, _)) => score > s || (score == s && c.chunk_id.as_str() < id),
            };
            if wins {
                best = Some((score, &c.chunk_id, i));
            }
        }
        selected.push(best.unwrap().2);
    }
    selected.into_iter().map(|i| cands[i].chunk_id.clone()).collect()
}

pub fn record(id: &str, values: Vec<f32>) -> ChunkRecord {
    ChunkRecord {
        chunk_id: id.to_owned(),
        doc_id: "doc".to_owned(),
        text: id.to_owned(),
        start_offset: 0,
        end_offset: 1,
        embedding: EmbeddingVector::new(values).unwrap(),
        metadata: BTreeMap::from([(SOURCE_KEY.to_owned(), "doc.txt".to_owned())]),
    }
}

/// Query plus up to 50 candidates of dimension at most 8, entries on a k/16 grid.
pub fn instance(rng: &mut ChaCha8Rng) -> (Vec<f32>, Vec<Arc<ChunkRecord>>) {
    let dim = rng.random_range(1..=8);
    let n = rng.random_range(1..=50);
    let vec = |rng: &mut ChaCha8Rng| loop {
        let v: Vec<f32> = (0..dim).map(|_| rng.random_range(-16i32..=16) as f32 / 16.0).collect();
        if v.iter().any(|&a| a != 0.0) {
            return v;
        }
    };
    let q = vec(rng);
    let cands = (0..n)
        .map(|i| Arc::new(record(&format!("c{i:02}"), vec(rng))))
        .collect();
    (q, cands)
}
