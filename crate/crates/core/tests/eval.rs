mod support;

use std::collections::BTreeMap;

use litrag::config::{load_config, save_config, EngineConfig};
use litrag::embed::{HashingEmbedder, Tokenizer, TokenizerConfig};
use litrag::eval::{
    cluster_stats, default_ratio_rows, export_embeddings, read_scores_csv, record_scores, sweep_chunking,
    token_ratio_table, SweepAxis, SweepReport, SweepSpec,
};
use litrag::index::build_index;
use litrag::ingest::{ingest_corpus, SplitParams};
use litrag::store::{Metric, VectorStore};
use support::{write_corpus, CorpusSpec};

fn per_doc_monotone(report: &SweepReport, non_increasing: bool) {
    for pair in report.rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let ok = if non_increasing {
            b.chunk_count <= a.chunk_count
        } else {
            b.chunk_count >= a.chunk_count
        };
        assert!(
            ok,
            "{} -> {}: {} then {}",
            a.value, b.value, a.chunk_count, b.chunk_count
        );
        for (doc, &n) in &a.per_document {
            let m = b.per_document[doc];
            assert!(if non_increasing { m <= n } else { m >= n }, "{doc}: {n} then {m}");
        }
    }
}

#[test]
fn standard_sweeps_are_monotone() {
    let corpus = tempfile::tempdir().unwrap();
    write_corpus(corpus.path(), &CorpusSpec::default());
    let emb = HashingEmbedder::new(128);

    let size = sweep_chunking(&SweepSpec::standard_size_axis(corpus.path()), &emb, None).unwrap();
    assert_eq!(
        size.rows.iter().map(|r| r.value).collect::<Vec<_>>(),
        [800, 1100, 1400, 1700, 2000]
    );
    assert!(size
        .rows
        .iter()
        .all(|r| r.ok && r.documents == 6 && r.chunk_overlap == 500));
    per_doc_monotone(&size, true);
    assert!(size.rows[0].chunk_count > size.rows[4].chunk_count);

    let overlap = sweep_chunking(&SweepSpec::standard_overlap_axis(corpus.path()), &emb, None).unwrap();
    assert_eq!(
        overlap.rows.iter().map(|r| r.value).collect::<Vec<_>>(),
        [0, 175, 350, 525, 700]
    );
    assert!(overlap.rows.iter().all(|r| r.ok && r.chunk_size == 1000));
    per_doc_monotone(&overlap, false);
    assert!(overlap.rows[4].chunk_count > overlap.rows[0].chunk_count);
}

#[test]
fn overlap_trend_in_cluster_statistics() {
    for seed in [17, 3, 5] {
        let corpus = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        write_corpus(
            corpus.path(),
            &CorpusSpec {
                seed,
                ..CorpusSpec::default()
            },
        );
        let emb = HashingEmbedder::new(768);
        let report = sweep_chunking(&SweepSpec::standard_overlap_axis(corpus.path()), &emb, Some(out.path())).unwrap();
        let dist: Vec<f64> = report
            .rows
            .iter()
            .map(|r| {
                let store = VectorStore::open(r.store_path.as_ref().unwrap()).unwrap();
                cluster_stats(&store, "doc_id", Metric::Euclidean)
                    .unwrap()
                    .mean_inter_centroid_distance()
            })
            .collect();
        assert!(dist.windows(2).all(|w| w[1] >= w[0]), "seed {seed}: {dist:?}");
        assert!(dist[4] > dist[0], "seed {seed}: flat {dist:?}");
    }
}

#[test]
fn sweep_rows_fail_independently() {
    let spec = SweepSpec::standard_size_axis("/nonexistent/corpus");
    let report = sweep_chunking(&spec, &HashingEmbedder::new(8), None).unwrap();
    assert!(report.rows.iter().all(|r| !r.ok && r.error.is_some()));

    let bad = SweepSpec {
        values: vec![300, 200],
        ..SweepSpec::standard_size_axis(".")
    };
    assert!(sweep_chunking(&bad, &HashingEmbedder::new(8), None).is_err());
    let overlap_too_big = SweepSpec {
        axis: SweepAxis::ChunkOverlap,
        values: vec![100, 1000],
        fixed: 1000,
        corpus_dir: ".".into(),
    };
    assert!(overlap_too_big.validate().is_err());
}

#[test]
fn token_table_arithmetic_is_exact() {
    let tok = Tokenizer::new(TokenizerConfig::heuristic(1.0)).unwrap();
    let rows = default_ratio_rows();
    let table = token_ratio_table(&rows, &tok, 4096, 768).unwrap();
    for (r, &(size, overlap)) in table.iter().zip(&rows) {
        assert_eq!((r.chunk_size_chars, r.chunk_overlap_chars), (size, overlap));
        assert_eq!(r.tokens_per_chunk, size);
        assert!((r.pct_of_llm_limit - 100.0 * size as f64 / 4096.0).abs() <= 1e-9);
        assert!((r.pct_of_em_limit - 100.0 * size as f64 / 768.0).abs() <= 1e-9);
    }
    let row = table.iter().find(|r| r.chunk_size_chars == 1600).unwrap();
    assert!((row.pct_of_llm_limit - 39.0625).abs() <= 1e-9);

    // 700 chars is ~91% of 768 only if characters are counted as tokens.
    let tok = Tokenizer::new(TokenizerConfig::heuristic(4.0)).unwrap();
    let t = token_ratio_table(&[(700, 200), (2800, 0)], &tok, 4096, 768).unwrap();
    assert!(!t[0].tokens_in_band && t[0].chars_in_band);
    assert_eq!(t[1].tokens_per_chunk, 700);
    assert!(t[1].tokens_in_band);
}

#[test]
fn ingest_records_bad_files_and_goes_on() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(
        dir.path(),
        &CorpusSpec {
            documents: 2,
            ..CorpusSpec::default()
        },
    );
    std::fs::write(dir.path().join("empty.txt"), "  \n").unwrap();
    std::fs::write(dir.path().join("scan.pdf"), b"%PDF-1.4").unwrap();
    #[cfg(unix)]
    std::os::unix::fs::symlink(dir.path().join("gone.txt"), dir.path().join("dangling.txt")).unwrap();

    let ingested = ingest_corpus(dir.path(), &SplitParams::default(), None).unwrap();
    let ids: Vec<&str> = ingested.documents.iter().map(|d| d.document.doc_id.as_str()).collect();
    assert_eq!(ids, ["doc00", "doc01"]);
    let failed: BTreeMap<String, String> = ingested
        .report
        .failures
        .iter()
        .map(|f| {
            (
                f.path.file_name().unwrap().to_string_lossy().into_owned(),
                f.error.clone(),
            )
        })
        .collect();
    assert!(failed.contains_key("empty.txt"));
    assert!(failed.contains_key("scan.pdf"));
    #[cfg(unix)]
    assert!(failed.contains_key("dangling.txt"), "{failed:?}");
    assert_eq!(
        ingested.report.total_chunks,
        ingested.documents.iter().map(|d| d.chunks.len()).sum::<usize>()
    );

    // A shell extractor stands in for a PDF tool.
    #[cfg(unix)]
    {
        let ingested = ingest_corpus(dir.path(), &SplitParams::default(), Some("echo extracted {path}")).unwrap();
        let scan = ingested.documents.iter().find(|d| d.document.doc_id == "scan").unwrap();
        assert!(scan.document.body.starts_with("extracted "));
    }
}

#[test]
fn export_has_one_row_per_chunk() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(
        dir.path(),
        &CorpusSpec {
            documents: 3,
            ..CorpusSpec::default()
        },
    );
    let emb = HashingEmbedder::new(16);
    let built = build_index(
        ingest_corpus(dir.path(), &SplitParams::default(), None).unwrap(),
        &emb,
        false,
    )
    .unwrap();
    let out = dir.path().join("emb.csv");
    export_embeddings(&built.store, &out).unwrap();
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.headers().unwrap().len(), 2 + 16);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), built.store.len());
    let first = built.store.records()[0].clone();
    assert_eq!(&rows[0][0], first.chunk_id);
    let parsed: Vec<f32> = (2..18).map(|i| rows[0][i].parse().unwrap()).collect();
    assert_eq!(parsed, first.embedding.values());
}

#[test]
fn cluster_stats_labels() {
    let dir = tempfile::tempdir().unwrap();
    write_corpus(
        dir.path(),
        &CorpusSpec {
            documents: 3,
            ..CorpusSpec::default()
        },
    );
    let emb = HashingEmbedder::new(64);
    let built = build_index(
        ingest_corpus(dir.path(), &SplitParams::default(), None).unwrap(),
        &emb,
        false,
    )
    .unwrap();
    let by_doc = cluster_stats(&built.store, "doc_id", Metric::Cosine).unwrap();
    let by_source = cluster_stats(&built.store, "source", Metric::Cosine).unwrap();
    assert_eq!(by_doc.labels, ["doc00", "doc01", "doc02"]);
    assert_eq!(by_source.labels, ["doc00.txt", "doc01.txt", "doc02.txt"]);
    assert_eq!(
        by_doc.per_label.values().map(|l| l.count).sum::<usize>(),
        built.store.len()
    );
    let d = &by_doc.inter_centroid_distances;
    assert!((0..3).all(|i| d[i][i] == 0.0 && (0..3).all(|j| d[i][j] == d[j][i])));
    assert!(cluster_stats(&built.store, "missing", Metric::Cosine).is_err());
    assert!(cluster_stats(&built.store, "doc_id", Metric::InnerProduct).is_err());
}

#[test]
fn scores_roundtrip() {
    let csv = "question_id,database_id,rater_id,score\nq1,db700,r1,4\nq1,db700,r2,5\nq1,db1000,r1,3\n";
    let summaries = record_scores(&read_scores_csv(csv.as_bytes()).unwrap()).unwrap();
    assert_eq!(summaries.len(), 2);
    assert_eq!(summaries[1].database_id, "db700");
    assert_eq!(summaries[1].mean_score, 4.5);
    let bad = read_scores_csv("question_id,database_id,rater_id,score\nq,d,r,6\n".as_bytes()).unwrap();
    assert!(record_scores(&bad).is_err());
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("engine.conf");
    std::fs::write(
        &path,
        r#"
store_path = "db"
mode = "mode1"
template_name = "qa_context"

[split]
chunk_size = 1000
chunk_overlap = 350

[retrieval]
k = 6
lambda = 0.5

[embedding]
provider = "hashing"
expected_dim = 32
"#,
    )
    .unwrap();
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg.split.chunk_size, 1000);
    assert_eq!(cfg.embedding.expected_dim, 32);
    let chain = cfg.chain_config();
    assert_eq!(chain.retrieval.k, 6);
    assert_eq!(chain.retrieval.lambda, 0.5);
    assert_eq!(chain.mode.to_string(), "mode1");
    assert!(cfg.advisories().is_empty());

    let copy = dir.path().join("copy.conf");
    save_config(&cfg, &copy).unwrap();
    assert_eq!(load_config(&copy).unwrap(), cfg);

    std::fs::write(&path, "[split]\nchunk_size = 100\nchunk_overlap = 100\n").unwrap();
    assert!(load_config(&path).is_err());
    assert!(load_config(&dir.path().join("absent.conf")).is_err());
    // Misspelled keys are errors, not silent defaults.
    assert!(EngineConfig::from_toml_str("[chat]\nurl = \"http://x\"\n").is_err());
    assert!(EngineConfig::from_toml_str("chunk_size = 700\n").is_err());
    assert_eq!(EngineConfig::default().split.chunk_size, 700);
}
