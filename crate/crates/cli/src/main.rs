//! `litrag`: ingest a corpus, ask grounded questions, run the chunking studies.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 flagged citations, 64 usage.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use litrag::chain::{AuxDir, Engine, HttpChat, Mode, TemplateName};
use litrag::citation::{extract_reference_section, verify_answer_citations, AuxIndex};
use litrag::config::{load_config, EngineConfig, DEFAULT_CONFIG_FILE};
use litrag::embed::Tokenizer;
use litrag::eval::{
    cluster_stats, default_ratio_rows, export_embeddings, sweep_chunking, token_ratio_table, write_embeddings_csv,
    SweepAxis, SweepSpec,
};
use litrag::index::{build_index, open_index};
use litrag::ingest::{ingest_corpus, load_document};
use litrag::store::{Metric, VectorStore};

const EXIT_FLAGGED: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "litrag", version, about = "Grounded question answering over a paper corpus")]
struct Cli {
    /// TOML config file [default: ./engine.conf]
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Split, embed and persist every document in a directory.
    Ingest {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Answer a question from the persisted store.
    Query {
        #[arg(long)]
        question: String,
        /// mode1, mode2 or plain
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        template: Option<TemplateName>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        k: Option<u64>,
        /// Exit 0 even when citations are flagged.
        #[arg(long)]
        no_verify: bool,
    },
    /// Build one store per chunk size or overlap value.
    Sweep {
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        /// The other parameter's value.
        #[arg(long)]
        fixed: usize,
        /// Corpus directory.
        #[arg(long)]
        dir: PathBuf,
        /// Persist each row's store under this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Token cost of representative chunks against the model limits.
    Tokens {
        /// `size:overlap` pairs, comma-separated.
        #[arg(long, value_delimiter = ',')]
        rows: Vec<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Check the citations of an answer against a document's reference list.
    Verify {
        #[arg(long)]
        answer_file: PathBuf,
        /// Document already in the store.
        #[arg(long, required_unless_present = "doc_file", conflicts_with = "doc_file")]
        doc_id: Option<String>,
        /// Document file read directly.
        #[arg(long)]
        doc_file: Option<PathBuf>,
    },
    /// Embedding cluster statistics.
    Stats {
        #[arg(long, default_value = "doc_id")]
        label_by: String,
        #[arg(long, default_value = "cosine")]
        metric: Metric,
    },
    /// Write embeddings as CSV (`-` for stdout).
    Export {
        #[arg(long)]
        out: PathBuf,
    },
}

fn no_color() -> bool {
    std::env::var_os("NO_COLOR").is_some_and(|v| !v.is_empty())
}

fn main() -> ExitCode {
    let mut log = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"));
    if no_color() {
        log.write_style(env_logger::WriteStyle::Never);
    }
    log.init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn config(path: Option<&Path>) -> Result<EngineConfig> {
    match path {
        Some(p) => Ok(load_config(p)?),
        None if Path::new(DEFAULT_CONFIG_FILE).exists() => Ok(load_config(Path::new(DEFAULT_CONFIG_FILE))?),
        None => {
            log::info!("no {DEFAULT_CONFIG_FILE}; using defaults");
            let mut cfg = EngineConfig::default();
            cfg.apply_env(|k| std::env::var(k).ok());
            cfg.validate()?;
            Ok(cfg)
        }
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn print_csv<T: Serialize>(rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn open_store(cfg: &EngineConfig) -> Result<VectorStore> {
    let (store, _) =
        open_index(&cfg.store_path, None).with_context(|| format!("opening store {}", cfg.store_path.display()))?;
    Ok(store)
}

fn run(cli: Cli) -> Result<u8> {
    let cfg = config(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest { dir } => {
            let ingested = ingest_corpus(&dir, &cfg.split, cfg.extractor.as_deref())?;
            let embedder = cfg.embedding.build()?;
            let built = build_index(ingested, embedder.as_ref(), true)?;
            built.persist(&cfg.store_path)?;
            print_json(&built.report)?;
            Ok(0)
        }
        Command::Query {
            question,
            mode,
            template,
            k,
            no_verify,
        } => {
            let mut chain = cfg.chain_config();
            if let Some(m) = mode {
                chain.mode = m;
            }
            if let Some(t) = template {
                chain.template = t;
            }
            if let Some(k) = k {
                chain.retrieval.k = k as usize;
            }
            let embedder = cfg.embedding.build()?;
            let (store, aux) = open_index(&cfg.store_path, Some(embedder.dim()))
                .with_context(|| format!("opening store {}", cfg.store_path.display()))?;
            let chat = HttpChat::new(&cfg.chat)?;
            let tokenizer = Tokenizer::new(cfg.tokenizer.clone())?;
            let engine = Engine {
                store: &store,
                embedder: embedder.as_ref(),
                chat: &chat,
                tokenizer: &tokenizer,
                aux: &aux,
            };
            let bundle = engine.answer(&question, &chain)?;
            print_json(&bundle)?;
            let flagged = bundle.verification.as_ref().is_some_and(|v| !v.pass);
            Ok(if flagged && !no_verify { EXIT_FLAGGED } else { 0 })
        }
        Command::Sweep {
            axis,
            values,
            fixed,
            dir,
            out,
            format,
        } => {
            let spec = SweepSpec {
                axis,
                values,
                fixed,
                corpus_dir: dir,
            };
            let embedder = cfg.embedding.build()?;
            let report = sweep_chunking(&spec, embedder.as_ref(), out.as_deref())?;
            match format {
                Format::Json => print_json(&report)?,
                Format::Csv => print_csv(&report.rows.iter().map(SweepCsvRow::from).collect::<Vec<_>>())?,
            }
            Ok(if report.rows.iter().any(|r| r.ok) { 0 } else { 1 })
        }
        Command::Tokens { rows, format } => {
            let rows = if rows.is_empty() {
                default_ratio_rows()
            } else {
                rows.iter().map(|r| parse_row(r)).collect::<Result<_>>()?
            };
            let tokenizer = Tokenizer::new(cfg.tokenizer.clone())?;
            let table = token_ratio_table(
                &rows,
                &tokenizer,
                cfg.chat.llm_token_limit,
                cfg.embedding.em_token_limit,
            )?;
            match format {
                Format::Json => print_json(&table)?,
                Format::Csv => print_csv(&table)?,
            }
            Ok(0)
        }
        Command::Verify {
            answer_file,
            doc_id,
            doc_file,
        } => {
            let answer =
                std::fs::read_to_string(&answer_file).with_context(|| format!("reading {}", answer_file.display()))?;
            let entries = match (doc_id, doc_file) {
                (_, Some(path)) => {
                    let doc = load_document(&path, cfg.extractor.as_deref())?;
                    extract_reference_section(&doc).unwrap_or_else(|e| {
                        log::warn!("{e}");
                        Vec::new()
                    })
                }
                (Some(id), None) => {
                    let dir = AuxDir::dir_for(&cfg.store_path, &id);
                    let aux = AuxIndex::open(&dir).with_context(|| format!("no indexed document `{id}`"))?;
                    aux.references.unwrap_or_default()
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            let report = verify_answer_citations(&answer, &entries);
            print_json(&report)?;
            Ok(if report.pass { 0 } else { EXIT_FLAGGED })
        }
        Command::Stats { label_by, metric } => {
            let store = open_store(&cfg)?;
            print_json(&cluster_stats(&store, &label_by, metric)?)?;
            Ok(0)
        }
        Command::Export { out } => {
            let store = open_store(&cfg)?;
            if out.as_os_str() == "-" {
                write_embeddings_csv(&store, std::io::stdout().lock())?;
            } else {
                export_embeddings(&store, &out)?;
            }
            Ok(0)
        }
    }
}

fn parse_row(s: &str) -> Result<(usize, usize)> {
    let Some((size, overlap)) = s.split_once(':') else {
        bail!("row `{s}` is not size:overlap");
    };
    Ok((size.trim().parse()?, overlap.trim().parse()?))
}

/// Flat sweep row; the per-document counts only go into JSON.
#[derive(Serialize)]
struct SweepCsvRow {
    value: usize,
    chunk_size: usize,
    chunk_overlap: usize,
    ok: bool,
    documents: usize,
    chunk_count: usize,
    mean_chunk_len: f64,
    store_path: String,
    error: String,
}

impl From<&litrag::eval::SweepRow> for SweepCsvRow {
    fn from(r: &litrag::eval::SweepRow) -> Self {
        Self {
            value: r.value,
            chunk_size: r.chunk_size,
            chunk_overlap: r.chunk_overlap,
            ok: r.ok,
            documents: r.documents,
            chunk_count: r.chunk_count,
            mean_chunk_len: r.mean_chunk_len,
            store_path: r
                .store_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            error: r.error.clone().unwrap_or_default(),
        }
    }
}
