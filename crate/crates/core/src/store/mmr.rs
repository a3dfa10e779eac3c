//! Maximal marginal relevance.
//!
//! From a candidate set `R`, repeatedly pick
//!
//! ```text
//! argmax_{Dᵢ ∈ R∖S} [ λ·Sim1(Dᵢ, Q) − (1−λ)·max_{Dⱼ ∈ S} Sim2(Dᵢ, Dⱼ) ]
//! ```
//!
//! until `k` records are selected. The max over an empty `S` is 0. For
//! distance metrics the negated distance plays the role of similarity.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ChunkRecord, Metric, ScoredRecord, StoreError};
use crate::embed::EmbeddingVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmrParams {
    /// 1 is pure relevance, 0 is pure diversity.
    pub lambda: f64,
    pub k: usize,
    /// Size of the candidate set fetched by `sim1` before re-ranking.
    pub fetch_n: usize,
    pub sim1: Metric,
    pub sim2: Metric,
}

impl MmrParams {
    /// Cosine for both similarities and `fetch_n = 4k`.
    pub fn new(lambda: f64, k: usize) -> Result<Self, StoreError> {
        let params = Self {
            lambda,
            k,
            fetch_n: 4 * k,
            sim1: Metric::Cosine,
            sim2: Metric::Cosine,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(StoreError::InvalidLambda(self.lambda));
        }
        if self.k == 0 {
            return Err(StoreError::InvalidParams("k must be positive".into()));
        }
        if self.fetch_n < self.k {
            return Err(StoreError::InvalidParams(format!(
                "fetch_n ({}) must be at least k ({})",
                self.fetch_n, self.k
            )));
        }
        self.sim1.validate()?;
        self.sim2.validate()
    }
}

/// Greedy MMR selection over `candidates`. Each result's `score` is its raw
/// `sim1` value against the query; ties go to the lower `chunk_id`.
pub fn mmr_rank(
    query: &EmbeddingVector,
    candidates: &[Arc<ChunkRecord>],
    params: &MmrParams,
) -> Result<Vec<ScoredRecord>, StoreError> {
    params.validate()?;
    let lambda = params.lambda;
    let raw: Vec<f64> = candidates
        .iter()
        .map(|c| params.sim1.eval(query.values(), c.embedding.values()))
        .collect::<Result<_, _>>()?;
    let relevance: Vec<f64> = raw.iter().map(|&r| params.sim1.preference(r)).collect();

    // Running max of Sim2 against the selected set, per candidate.
    let mut penalty: Vec<Option<f64>> = vec![None; candidates.len()];
    let mut taken = vec![false; candidates.len()];
    let mut out = Vec::with_capacity(params.k.min(candidates.len()));

    while out.len() < params.k {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..candidates.len()).filter(|&i| !taken[i]) {
            let score = lambda * relevance[i] - (1.0 - lambda) * penalty[i].unwrap_or(0.0);
            let better = match best {
                None => true,
                Some((j, s)) => score > s || (score == s && candidates[i].chunk_id < candidates[j].chunk_id),
            };
            if better {
                best = Some((i, score));
            }
        }
        let Some((pick, _)) = best else { break };
        taken[pick] = true;
        out.push(ScoredRecord {
            record: Arc::clone(&candidates[pick]),
            score: raw[pick],
        });
        for i in (0..candidates.len()).filter(|&i| !taken[i]) {
            let s = params
                .sim2
                .eval(candidates[i].embedding.values(), candidates[pick].embedding.values())?;
            let s = params.sim2.preference(s);
            penalty[i] = Some(penalty[i].map_or(s, |p| p.max(s)));
        }
    }
    Ok(out)
}
