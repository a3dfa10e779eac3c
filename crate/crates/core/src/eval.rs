//! Desk-scale studies: chunking sweeps, token-limit ratios, embedding
//! cluster statistics, embedding export and expert-score aggregation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{Embedder, TokenError, Tokenizer};
use crate::index::{build_index, row_dir};
use crate::ingest::{ingest_corpus, SplitParams};
use crate::store::{Metric, StoreError, VectorStore};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("limits must be positive")]
    InvalidLimit,
    #[error("record `{0}` has no `{1}` label")]
    MissingLabel(String, String),
    #[error("{0} is not a distance; cluster statistics need a distance or cosine")]
    UnsupportedMetric(Metric),
    #[error("score {score} for {question_id}/{database_id} is outside 1-5")]
    ScoreOutOfRange {
        question_id: String,
        database_id: String,
        score: i64,
    },
    #[error("store is empty")]
    EmptyStore,
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn io_err(path: &Path, e: impl fmt::Display) -> EvalError {
    EvalError::Io {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    ChunkSize,
    ChunkOverlap,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::ChunkSize => "chunk_size",
            SweepAxis::ChunkOverlap => "chunk_overlap",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "chunk_size" | "size" => Ok(SweepAxis::ChunkSize),
            "chunk_overlap" | "overlap" => Ok(SweepAxis::ChunkOverlap),
            other => Err(EvalError::InvalidSweep(format!("unknown axis `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
    /// The other parameter, held constant.
    pub fixed: usize,
    pub corpus_dir: PathBuf,
}

impl SweepSpec {
    /// Size sweep 800..=2000 step 300 at overlap 500.
    pub fn standard_size_axis(corpus_dir: impl Into<PathBuf>) -> Self {
        Self {
            axis: SweepAxis::ChunkSize,
            values: (800..=2000).step_by(300).collect(),
            fixed: 500,
            corpus_dir: corpus_dir.into(),
        }
    }

    /// Overlap sweep 0..=700 step 175 at size 1000.
    pub fn standard_overlap_axis(corpus_dir: impl Into<PathBuf>) -> Self {
        Self {
            axis: SweepAxis::ChunkOverlap,
            values: (0..=700).step_by(175).collect(),
            fixed: 1000,
            corpus_dir: corpus_dir.into(),
        }
    }

    pub fn params_for(&self, value: usize) -> Result<SplitParams, EvalError> {
        let (size, overlap) = match self.axis {
            SweepAxis::ChunkSize => (value, self.fixed),
            SweepAxis::ChunkOverlap => (self.fixed, value),
        };
        SplitParams::new(size, overlap).map_err(|e| EvalError::InvalidSweep(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.values.is_empty() {
            return Err(EvalError::InvalidSweep("no values".into()));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvalError::InvalidSweep("values must be strictly increasing".into()));
        }
        for &v in &self.values {
            self.params_for(v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    pub chunk_size: usize,
    pub chunk_overlap: usize,
    pub ok: bool,
    pub documents: usize,
    pub chunk_count: usize,
    pub mean_chunk_len: f64,
    /// Chunk count per document id.
    pub per_document: BTreeMap<String, usize>,
    pub store_path: Option<PathBuf>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub fixed: usize,
    pub rows: Vec<SweepRow>,
}

/// Builds one store per axis value.
///
/// Rows run in parallel. With `out_root`, each row's store is persisted under
/// `<out_root>/<axis>-<value>/`. A failing row is marked and the sweep goes on.
pub fn sweep_chunking(
    spec: &SweepSpec,
    embedder: &dyn Embedder,
    out_root: Option<&Path>,
) -> Result<SweepReport, EvalError> {
    spec.validate()?;
    let rows = spec
        .values
        .par_iter()
        .map(|&value| {
            let params = spec.params_for(value).expect("validated");
            let mut row = SweepRow {
                value,
                chunk_size: params.chunk_size,
                chunk_overlap: params.chunk_overlap,
                ok: false,
                documents: 0,
                chunk_count: 0,
                mean_chunk_len: 0.0,
                per_document: BTreeMap::new(),
                store_path: None,
                error: None,
            };
            if let Err(e) = sweep_row(spec, value, &params, embedder, out_root, &mut row) {
                log::warn!("sweep row {value} failed: {e}");
                row.error = Some(e);
            } else {
                row.ok = true;
            }
            row
        })
        .collect();
    Ok(SweepReport {
        axis: spec.axis,
        fixed: spec.fixed,
        rows,
    })
}

fn sweep_row(
    spec: &SweepSpec,
    value: usize,
    params: &SplitParams,
    embedder: &dyn Embedder,
    out_root: Option<&Path>,
    row: &mut SweepRow,
) -> Result<(), String> {
    let ingested = ingest_corpus(&spec.corpus_dir, params, None).map_err(|e| e.to_string())?;
    let total_chars: usize = ingested
        .documents
        .iter()
        .flat_map(|d| &d.chunks)
        .map(|c| c.text.chars().count())
        .sum();
    row.documents = ingested.documents.len();
    row.chunk_count = ingested.report.total_chunks;
    row.mean_chunk_len = if row.chunk_count == 0 {
        0.0
    } else {
        total_chars as f64 / row.chunk_count as f64
    };
    row.per_document = ingested
        .report
        .documents
        .iter()
        .map(|d| (d.doc_id.clone(), d.chunk_count))
        .collect();
    let built = build_index(ingested, embedder, false).map_err(|e| e.to_string())?;
    if let Some(root) = out_root {
        let dir = row_dir(root, spec.axis.as_str(), value);
        built.persist(&dir).map_err(|e| e.to_string())?;
        row.store_path = Some(dir);
    }
    Ok(())
}

/// Suggested band for chunk size against the embedding model's limit, in
/// percent. Whether "size" means characters or tokens is left open, so both
/// readings are reported.
pub const DIMENSION_BAND: (f64, f64) = (85.0, 95.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub chunk_size_chars: usize,
    pub chunk_overlap_chars: usize,
    pub tokens_per_chunk: usize,
    pub pct_of_llm_limit: f64,
    pub pct_of_em_limit: f64,
    /// Chunk size in characters as a percentage of the embedding limit.
    pub chars_pct_of_em_limit: f64,
    /// Whether tokens, respectively characters, fall in the 85-95% band.
    pub tokens_in_band: bool,
    pub chars_in_band: bool,
}

/// Size/overlap pairs of the two sweeps, the 700/200 operating point and a 1600-char row.
pub fn default_ratio_rows() -> Vec<(usize, usize)> {
    let mut rows = vec![(700, 200)];
    rows.extend((800..=2000).step_by(300).map(|s| (s, 500)));
    rows.push((1600, 400));
    rows.extend((0..=700).step_by(175).map(|o| (1000, o)));
    rows
}

/// Filler used for representative chunks.
const FILLER: &str = "The oblique detonation wave stabilizes behind the shock where the induction zone ends and heat release couples to the flow. ";

/// A chunk of exactly `chars` characters.
pub fn representative_chunk(chars: usize) -> String {
    FILLER.chars().cycle().take(chars).collect()
}

/// Token cost of one representative chunk per row, relative to both limits.
pub fn token_ratio_table(
    rows: &[(usize, usize)],
    tok: &Tokenizer,
    llm_limit: usize,
    em_limit: usize,
) -> Result<Vec<RatioRow>, EvalError> {
    if llm_limit == 0 || em_limit == 0 {
        return Err(EvalError::InvalidLimit);
    }
    let (lo, hi) = DIMENSION_BAND;
    rows.iter()
        .map(|&(size, overlap)| {
            let tokens = tok.count(&representative_chunk(size))?;
            let pct_em = 100.0 * tokens as f64 / em_limit as f64;
            let chars_pct = 100.0 * size as f64 / em_limit as f64;
            Ok(RatioRow {
                chunk_size_chars: size,
                chunk_overlap_chars: overlap,
                tokens_per_chunk: tokens,
                pct_of_llm_limit: 100.0 * tokens as f64 / llm_limit as f64,
                pct_of_em_limit: pct_em,
                chars_pct_of_em_limit: chars_pct,
                tokens_in_band: (lo..=hi).contains(&pct_em),
                chars_in_band: (lo..=hi).contains(&chars_pct),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelStats {
    pub count: usize,
    pub centroid: Vec<f64>,
    pub mean_intra_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub metric: Metric,
    /// Sorted labels; row/column order of `inter_centroid_distances`.
    pub labels: Vec<String>,
    pub per_label: BTreeMap<String, LabelStats>,
    pub inter_centroid_distances: Vec<Vec<f64>>,
}

impl ClusterStats {
    /// Mean of the off-diagonal centroid distances; 0 for one label.
    pub fn mean_inter_centroid_distance(&self) -> f64 {
        let n = self.labels.len();
        if n < 2 {
            return 0.0;
        }
        let sum: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| self.inter_centroid_distances[i][j])
            .sum();
        sum / (n * (n - 1) / 2) as f64
    }

    pub fn mean_intra_distance(&self) -> f64 {
        let n = self.per_label.len().max(1) as f64;
        self.per_label.values().map(|s| s.mean_intra_distance).sum::<f64>() / n
    }
}

/// Distance under `m`; cosine becomes `1 - cos`.
fn distance(m: Metric, x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    let raw = m.eval(x, y)?;
    Ok(if m == Metric::Cosine { 1.0 - raw } else { raw })
}

/// Groups records by `label_by` and measures spread and separation.
///
/// `label_by` is `doc_id`, `source`, or any metadata key.
pub fn cluster_stats(store: &VectorStore, label_by: &str, m: Metric) -> Result<ClusterStats, EvalError> {
    m.validate()?;
    if m == Metric::InnerProduct {
        return Err(EvalError::UnsupportedMetric(m));
    }
    let records = store.records();
    if records.is_empty() {
        return Err(EvalError::EmptyStore);
    }
    let mut groups: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for r in &records {
        let label = match label_by {
            "doc_id" => Some(r.doc_id.clone()),
            key => r.metadata.get(key).cloned(),
        }
        .ok_or_else(|| EvalError::MissingLabel(r.chunk_id.clone(), label_by.to_owned()))?;
        groups.entry(label).or_default().push(r.embedding.to_f64());
    }
    let dim = store.dim();
    let mut per_label = BTreeMap::new();
    for (label, members) in &groups {
        let mut centroid = vec![0.0; dim];
        for v in members {
            centroid.iter_mut().zip(v).for_each(|(c, x)| *c += x);
        }
        let n = members.len() as f64;
        centroid.iter_mut().for_each(|c| *c /= n);
        let mut intra = 0.0;
        for v in members {
            intra += distance(m, v, &centroid)?;
        }
        per_label.insert(
            label.clone(),
            LabelStats {
                count: members.len(),
                centroid,
                mean_intra_distance: (intra / n).max(0.0),
            },
        );
    }
    let labels: Vec<String> = per_label.keys().cloned().collect();
    let mut inter = vec![vec![0.0; labels.len()]; labels.len()];
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            let d = distance(m, &per_label[&labels[i]].centroid, &per_label[&labels[j]].centroid)?;
            inter[i][j] = d;
            inter[j][i] = d;
        }
    }
    Ok(ClusterStats {
        metric: m,
        labels,
        per_label,
        inter_centroid_distances: inter,
    })
}

/// Writes `chunk_id,doc_id,e0,e1,...` rows, one per record.
pub fn export_embeddings(store: &VectorStore, out_path: &Path) -> Result<(), EvalError> {
    let file = std::fs::File::create(out_path).map_err(|e| io_err(out_path, e))?;
    write_embeddings_csv(store, file).map_err(|e| match e {
        EvalError::Io { message, .. } => io_err(out_path, message),
        other => other,
    })
}

/// CSV form of [`export_embeddings`] into any writer.
pub fn write_embeddings_csv(store: &VectorStore, out: impl std::io::Write) -> Result<(), EvalError> {
    let records = store.records();
    if records.is_empty() {
        return Err(EvalError::EmptyStore);
    }
    let err = |e: csv::Error| io_err(Path::new("-"), e);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["chunk_id".to_owned(), "doc_id".to_owned()];
    header.extend((0..store.dim()).map(|i| format!("e{i}")));
    w.write_record(&header).map_err(err)?;
    for r in &records {
        let mut row = vec![r.chunk_id.clone(), r.doc_id.clone()];
        row.extend(r.embedding.values().iter().map(f32::to_string));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| io_err(Path::new("-"), e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub question_id: String,
    pub database_id: String,
    pub rater_id: String,
    pub score: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub question_id: String,
    pub database_id: String,
    pub raters: usize,
    pub mean_score: f64,
}

/// Mean score per (question, database), in key order. Rater ids are dropped.
pub fn record_scores(records: &[ScoreRecord]) -> Result<Vec<ScoreSummary>, EvalError> {
    let mut groups: BTreeMap<(&str, &str), (i64, usize)> = BTreeMap::new();
    for r in records {
        if !(1..=5).contains(&r.score) {
            return Err(EvalError::ScoreOutOfRange {
                question_id: r.question_id.clone(),
                database_id: r.database_id.clone(),
                score: r.score,
            });
        }
        let g = groups.entry((&r.question_id, &r.database_id)).or_default();
        g.0 += r.score;
        g.1 += 1;
    }
    Ok(groups
        .into_iter()
        .map(|((q, d), (sum, n))| ScoreSummary {
            question_id: q.to_owned(),
            database_id: d.to_owned(),
            raters: n,
            mean_score: sum as f64 / n as f64,
        })
        .collect())
}

/// Reads `question_id,database_id,rater_id,score` rows.
pub fn read_scores_csv(input: impl std::io::Read) -> Result<Vec<ScoreRecord>, EvalError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| io_err(Path::new("-"), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{EmbeddingVector, TokenizerConfig};
    use crate::store::ChunkRecord;

    fn store(vs: &[(&str, &str, &[f32])]) -> VectorStore {
        let s = VectorStore::new(vs[0].2.len());
        let records = vs
            .iter()
            .map(|(id, doc, v)| ChunkRecord {
                chunk_id: id.to_string(),
                doc_id: doc.to_string(),
                text: "t".into(),
                start_offset: 0,
                end_offset: 1,
                embedding: EmbeddingVector::new(v.to_vec()).unwrap(),
                metadata: [("source".to_string(), format!("{doc}.txt"))].into(),
            })
            .collect();
        s.upsert(records).unwrap();
        s
    }

    #[test]
    fn ratio_rows() {
        let tok = Tokenizer::new(TokenizerConfig::heuristic(1.0)).unwrap();
        let rows = token_ratio_table(&[(1600, 400), (0, 0)], &tok, 4096, 768).unwrap();
        assert!((rows[0].pct_of_llm_limit - 39.0625).abs() < 1e-9);
        assert_eq!(rows[1].tokens_per_chunk, 0);
        assert_eq!(rows[1].pct_of_llm_limit, 0.0);

        let tok = Tokenizer::new(TokenizerConfig::heuristic(4.0)).unwrap();
        let r = &token_ratio_table(&[(700, 200)], &tok, 4096, 768).unwrap()[0];
        assert_eq!(r.tokens_per_chunk, 175);
        assert!((r.pct_of_llm_limit - 4.27246).abs() < 1e-4);
        assert!((r.pct_of_em_limit - 22.78646).abs() < 1e-4);
        assert!(token_ratio_table(&[(1, 1)], &tok, 0, 1).is_err());
    }

    #[test]
    fn representative_length() {
        assert_eq!(representative_chunk(1234).chars().count(), 1234);
    }

    #[test]
    fn degenerate_clusters() {
        let s = store(&[
            ("a1", "a", &[1.0, 0.0]),
            ("a2", "a", &[1.0, 0.0]),
            ("b1", "b", &[0.0, 3.0]),
        ]);
        let c = cluster_stats(&s, "doc_id", Metric::Euclidean).unwrap();
        assert_eq!(c.per_label["a"].mean_intra_distance, 0.0);
        assert!((c.inter_centroid_distances[0][1] - 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(c.inter_centroid_distances[1][1], 0.0);

        let s = store(&[("a1", "a", &[1.0, 0.0])]);
        let c = cluster_stats(&s, "source", Metric::Cosine).unwrap();
        assert_eq!(c.inter_centroid_distances, vec![vec![0.0]]);
        assert!(matches!(
            cluster_stats(&s, "topic", Metric::Cosine),
            Err(EvalError::MissingLabel(..))
        ));
        assert!(matches!(
            cluster_stats(&s, "doc_id", Metric::InnerProduct),
            Err(EvalError::UnsupportedMetric(_))
        ));
    }

    #[test]
    fn export_shape() {
        let s = store(&[
            ("a1", "a", &[1.0, 0.5, 0.25, 0.0]),
            ("a2", "a", &[1.0; 4]),
            ("b1", "b", &[0.1; 4]),
        ]);
        let mut buf = Vec::new();
        write_embeddings_csv(&s, &mut buf).unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(r.headers().unwrap().len(), 6);
        assert_eq!(r.records().count(), 3);
        assert!(matches!(
            write_embeddings_csv(&VectorStore::new(2), Vec::new()),
            Err(EvalError::EmptyStore)
        ));
    }

    #[test]
    fn scores() {
        let rec = |rater: &str, score| ScoreRecord {
            question_id: "Q-2".into(),
            database_id: "cS-2".into(),
            rater_id: rater.into(),
            score,
        };
        let recs = [rec("r1", 3), rec("r2", 4), rec("r3", 4), rec("r4", 5)];
        let out = record_scores(&recs).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].mean_score, 4.0);
        assert_eq!(record_scores(&recs[..1]).unwrap()[0].mean_score, 3.0);
        assert!(matches!(
            record_scores(&[rec("r", 6)]),
            Err(EvalError::ScoreOutOfRange { .. })
        ));

        let parsed = read_scores_csv("question_id,database_id,rater_id,score\nQ-1,cO-1,x,2\n".as_bytes()).unwrap();
        assert_eq!(parsed[0].score, 2);
    }

    #[test]
    fn sweep_spec_checks() {
        let mut s = SweepSpec::standard_overlap_axis("/nonexistent");
        assert_eq!(s.values, [0, 175, 350, 525, 700]);
        s.validate().unwrap();
        s.values = vec![175, 0];
        assert!(s.validate().is_err());
        s.values = vec![1000];
        assert!(s.validate().is_err());
        assert_eq!(SweepSpec::standard_size_axis("x").values, [800, 1100, 1400, 1700, 2000]);
    }
}
