//! Grounded answering: retrieve, attach citations, render, check the budget,
//! ask the chat model, verify what it cited.

mod assemble;
mod budget;
mod chat;
mod template;

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::citation::{
    extract_citation_markers, format_citation_list, locate_expanded_chunk, resolve_citations, verify_answer_citations,
    AuxIndex, CitationEntry, CitationError, CitationMarker, VerificationReport,
};
use crate::embed::{EmbedError, Embedder, TokenError, Tokenizer};
use crate::store::{Metric, MmrParams, ScoredRecord, StoreError, VectorStore};

pub use assemble::{assemble_mode1, assemble_mode2, CITATION_DELIMITER, EMPTY_BLOCK};
pub use budget::{budget_check, TokenBudget, DEFAULT_LLM_TOKEN_LIMIT, DEFAULT_RESERVED_FOR_ANSWER};
pub use chat::{ChatConfig, ChatError, ChatModel, HttpChat};
pub use template::{
    render_prompt, PromptTemplate, TemplateError, TemplateName, DEFAULT_MAX_SUBQUERIES, SLOT_CITATIONS, SLOT_CONTEXT,
    SLOT_QUESTION,
};

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("prompt needs {prompt_tokens} tokens plus {reserved} reserved, over the {limit}-token limit even with one chunk")]
    BudgetExceeded {
        prompt_tokens: usize,
        reserved: usize,
        limit: usize,
    },
    #[error("retrieval returned no chunks")]
    RetrievalEmpty,
    #[error("chat service failed: {0}")]
    ChatServiceFailed(#[from] ChatError),
    #[error("citations for chunk `{chunk_id}`: {source}")]
    Citation {
        chunk_id: String,
        #[source]
        source: CitationError,
    },
    #[error("embedding the question: {0}")]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("counting tokens: {0}")]
    Token(#[from] TokenError),
    #[error("invalid chain configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Retrieved chunks with their citation lists appended.
    Mode1,
    /// Expanded chunks as context, citation list in its own slot.
    #[default]
    Mode2,
    /// Retrieved chunks only, no citation handling.
    Plain,
}

impl std::str::FromStr for Mode {
    type Err = ChainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mode1" | "1" | "i" => Ok(Mode::Mode1),
            "mode2" | "2" | "ii" => Ok(Mode::Mode2),
            "plain" => Ok(Mode::Plain),
            other => Err(ChainError::Config(format!("unknown mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Mode1 => "mode1",
            Mode::Mode2 => "mode2",
            Mode::Plain => "plain",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub k: usize,
    pub use_mmr: bool,
    pub lambda: f64,
    /// MMR candidate pool; `4 * k` when unset.
    pub fetch_n: Option<usize>,
    /// Relevance metric, also used for plain top-k.
    pub sim1: Metric,
    /// Redundancy metric between selected chunks.
    pub sim2: Metric,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            k: 4,
            use_mmr: true,
            lambda: 0.7,
            fetch_n: None,
            sim1: Metric::Cosine,
            sim2: Metric::Cosine,
        }
    }
}

impl RetrievalConfig {
    pub fn mmr_params(&self) -> MmrParams {
        MmrParams {
            lambda: self.lambda,
            k: self.k,
            fetch_n: self.fetch_n.unwrap_or(4 * self.k),
            sim1: self.sim1,
            sim2: self.sim2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub retrieval: RetrievalConfig,
    pub template: TemplateName,
    pub mode: Mode,
    pub temperature: f64,
    pub llm_token_limit: usize,
    pub reserved_for_answer: usize,
    /// Cap on sub-queries for the sensible validation stencil.
    pub max_subqueries: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            retrieval: RetrievalConfig::default(),
            template: TemplateName::CustomCitation,
            mode: Mode::Mode2,
            temperature: 0.1,
            llm_token_limit: DEFAULT_LLM_TOKEN_LIMIT,
            reserved_for_answer: DEFAULT_RESERVED_FOR_ANSWER,
            max_subqueries: DEFAULT_MAX_SUBQUERIES,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<(), ChainError> {
        let bad = |m: &str| Err(ChainError::Config(m.to_owned()));
        if self.retrieval.k == 0 {
            return bad("k must be positive");
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad("temperature must be a non-negative number");
        }
        if self.llm_token_limit <= self.reserved_for_answer {
            return bad("llm_token_limit must exceed reserved_for_answer");
        }
        if self.retrieval.use_mmr {
            self.retrieval.mmr_params().validate()?;
        }
        Ok(())
    }

    pub fn prompt_template(&self) -> PromptTemplate {
        let tpl = PromptTemplate::builtin(self.template);
        if tpl.params.contains_key("max-subqueries") {
            tpl.with_param("max-subqueries", self.max_subqueries)
        } else {
            tpl
        }
    }
}

/// Source of per-document auxiliary indexes.
pub trait AuxProvider: Send + Sync {
    fn aux(&self, doc_id: &str) -> Result<Arc<AuxIndex>, CitationError>;
}

impl AuxProvider for HashMap<String, Arc<AuxIndex>> {
    fn aux(&self, doc_id: &str) -> Result<Arc<AuxIndex>, CitationError> {
        self.get(doc_id)
            .cloned()
            .ok_or_else(|| CitationError::NoAuxIndex(doc_id.to_owned()))
    }
}

/// Loads indexes from `<store>/aux/<doc_id>/` on first use.
#[derive(Debug)]
pub struct AuxDir {
    root: PathBuf,
    cache: Mutex<HashMap<String, Arc<AuxIndex>>>,
}

impl AuxDir {
    pub fn new(store_path: &Path) -> Self {
        Self {
            root: store_path.join("aux"),
            cache: Mutex::default(),
        }
    }

    pub fn dir_for(store_path: &Path, doc_id: &str) -> PathBuf {
        store_path.join("aux").join(doc_id)
    }
}

impl AuxProvider for AuxDir {
    fn aux(&self, doc_id: &str) -> Result<Arc<AuxIndex>, CitationError> {
        if let Some(hit) = self.cache.lock().unwrap_or_else(|p| p.into_inner()).get(doc_id) {
            return Ok(Arc::clone(hit));
        }
        let dir = self.root.join(doc_id);
        if !dir.is_dir() {
            return Err(CitationError::NoAuxIndex(doc_id.to_owned()));
        }
        let aux = Arc::new(AuxIndex::open(&dir)?);
        self.cache
            .lock()
            .unwrap_or_else(|p| p.into_inner())
            .insert(doc_id.to_owned(), Arc::clone(&aux));
        Ok(aux)
    }
}

/// Everything produced for one question.
#[derive(Debug, Clone, Serialize)]
pub struct AnswerBundle {
    pub question: String,
    pub mode: Mode,
    pub template: TemplateName,
    pub temperature: f64,
    pub rendered_prompt: String,
    pub answer_text: String,
    /// Chunks that made it into the prompt, in retrieval order.
    pub retrieved: Vec<ScoredRecord>,
    /// Retrieved chunks shed to fit the token budget.
    pub dropped: Vec<ScoredRecord>,
    pub citation_list: Vec<CitationEntry>,
    pub unresolved: Vec<CitationMarker>,
    pub budget: TokenBudget,
    /// Present in mode I and II.
    pub verification: Option<VerificationReport>,
}

/// Per-chunk grounding material.
struct Grounded {
    hit: ScoredRecord,
    /// Expanded chunk id and text (mode II).
    expanded: Option<(String, String)>,
    citations: Vec<CitationEntry>,
    unresolved: Vec<CitationMarker>,
}

/// The answering pipeline over one store and a set of services.
pub struct Engine<'a> {
    pub store: &'a VectorStore,
    pub embedder: &'a dyn Embedder,
    pub chat: &'a dyn ChatModel,
    pub tokenizer: &'a Tokenizer,
    pub aux: &'a dyn AuxProvider,
}

impl Engine<'_> {
    pub fn answer(&self, question: &str, cfg: &ChainConfig) -> Result<AnswerBundle, ChainError> {
        cfg.validate()?;
        let tpl = cfg.prompt_template();
        let query = self.embedder.embed_one(question)?;
        let hits = if cfg.retrieval.use_mmr {
            self.store.mmr_select(&query, &cfg.retrieval.mmr_params())
        } else {
            self.store.top_k(&query, cfg.retrieval.k, cfg.retrieval.sim1)
        };
        let hits = match hits {
            Ok(h) if !h.is_empty() => h,
            Ok(_) | Err(StoreError::EmptyStore) => return Err(ChainError::RetrievalEmpty),
            Err(e) => return Err(e.into()),
        };

        let mut grounded = hits
            .into_iter()
            .map(|hit| self.ground(hit, cfg.mode))
            .collect::<Result<Vec<_>, _>>()?;
        let mut dropped = Vec::new();

        loop {
            let (context, citation_list, unresolved) = build_context(&grounded, cfg.mode);
            let block = match cfg.mode {
                Mode::Plain => tpl.uses(SLOT_CITATIONS).then(String::new),
                _ => Some(format_citation_list(&citation_list)),
            };
            let prompt = render_prompt(&tpl, &context, question, block.as_deref())?;
            let budget = budget_check(&prompt, self.tokenizer, cfg.llm_token_limit, cfg.reserved_for_answer)?;
            if !budget.fits {
                if grounded.len() == 1 {
                    return Err(ChainError::BudgetExceeded {
                        prompt_tokens: budget.prompt_tokens,
                        reserved: cfg.reserved_for_answer,
                        limit: cfg.llm_token_limit,
                    });
                }
                let worst = weakest(&grounded, cfg.retrieval.sim1);
                let shed = grounded.remove(worst);
                log::info!("dropping {} to fit the token budget", shed.hit.record.chunk_id);
                dropped.push(shed.hit);
                continue;
            }

            let answer_text = self.chat.complete(&prompt, cfg.temperature)?;
            let verification = (cfg.mode != Mode::Plain).then(|| verify_answer_citations(&answer_text, &citation_list));
            return Ok(AnswerBundle {
                question: question.to_owned(),
                mode: cfg.mode,
                template: cfg.template,
                temperature: cfg.temperature,
                rendered_prompt: prompt,
                answer_text,
                retrieved: grounded.into_iter().map(|g| g.hit).collect(),
                dropped,
                citation_list,
                unresolved,
                budget,
                verification,
            });
        }
    }

    fn ground(&self, hit: ScoredRecord, mode: Mode) -> Result<Grounded, ChainError> {
        if mode == Mode::Plain {
            return Ok(Grounded {
                hit,
                expanded: None,
                citations: Vec::new(),
                unresolved: Vec::new(),
            });
        }
        let wrap = |source: CitationError| ChainError::Citation {
            chunk_id: hit.record.chunk_id.clone(),
            source,
        };
        let aux = self.aux.aux(&hit.record.doc_id).map_err(wrap)?;
        let expanded = locate_expanded_chunk(&aux, &hit.record).map_err(wrap)?;
        let (citations, unresolved) = match &aux.references {
            Some(entries) => {
                let r = resolve_citations(&extract_citation_markers(&expanded.text), entries);
                (r.citation_list, r.unresolved)
            }
            None => {
                log::warn!(
                    "{} has no reference section; its citation list is empty",
                    hit.record.doc_id
                );
                (Vec::new(), Vec::new())
            }
        };
        let expanded = Some((expanded.chunk_id.clone(), expanded.text.clone()));
        Ok(Grounded {
            hit,
            expanded,
            citations,
            unresolved,
        })
    }
}

/// Index of the least relevant chunk; later chunks lose ties.
fn weakest(grounded: &[Grounded], metric: Metric) -> usize {
    let mut worst = 0;
    for (i, g) in grounded.iter().enumerate() {
        if metric.preference(g.hit.score) <= metric.preference(grounded[worst].hit.score) {
            worst = i;
        }
    }
    worst
}

fn source_line(hit: &ScoredRecord) -> String {
    format!("Source: {}", hit.record.source().unwrap_or(&hit.record.doc_id))
}

/// Context text, merged citation list and unresolved markers for the kept chunks.
///
/// Citation lists of chunks from the same document are merged without repeats.
fn build_context(grounded: &[Grounded], mode: Mode) -> (String, Vec<CitationEntry>, Vec<CitationMarker>) {
    let mut doc_order: Vec<&str> = Vec::new();
    let mut per_doc: HashMap<&str, Vec<&Grounded>> = HashMap::new();
    for g in grounded {
        let doc = g.hit.record.doc_id.as_str();
        if !per_doc.contains_key(doc) {
            doc_order.push(doc);
        }
        per_doc.entry(doc).or_default().push(g);
    }
    let mut citation_list: Vec<CitationEntry> = Vec::new();
    let mut unresolved = Vec::new();
    let mut pieces = Vec::new();
    for doc in doc_order {
        let group = &per_doc[doc];
        let mut merged: Vec<CitationEntry> = Vec::new();
        for g in group {
            for e in &g.citations {
                if !merged.iter().any(|m| m.label == e.label && m.full_text == e.full_text) {
                    merged.push(e.clone());
                }
            }
            for m in &g.unresolved {
                if !unresolved.iter().any(|u: &CitationMarker| u.key() == m.key()) {
                    unresolved.push(m.clone());
                }
            }
        }
        let source = source_line(&group[0].hit);
        match mode {
            Mode::Plain => {
                pieces.extend(
                    group
                        .iter()
                        .map(|g| format!("{}\n{}", g.hit.record.text, source_line(&g.hit))),
                );
            }
            Mode::Mode1 => {
                let text: Vec<&str> = group.iter().map(|g| g.hit.record.text.as_str()).collect();
                pieces.push(format!(
                    "{}\n{source}",
                    assemble::assemble_text(&text.join("\n\n"), &merged)
                ));
            }
            Mode::Mode2 => {
                let mut seen: Vec<&str> = Vec::new();
                for g in group {
                    if let Some((id, text)) = &g.expanded {
                        if !seen.contains(&id.as_str()) {
                            seen.push(id);
                            pieces.push(format!("{text}\n{source}"));
                        }
                    }
                }
            }
        }
        citation_list.extend(merged);
    }
    (pieces.join("\n\n"), citation_list, unresolved)
}
