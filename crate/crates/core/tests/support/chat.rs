//! In-process chat stub and the canned replies used against it.

use std::collections::HashSet;
use std::path::Path;
use std::sync::Mutex;

use litrag::chain::{AuxProvider, ChainConfig, ChainError, ChatError, ChatModel, Engine, Mode, TemplateName};
use litrag::embed::{HashingEmbedder, Tokenizer, TokenizerConfig};
use litrag::store::VectorStore;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const QUESTION: &str = "How do boundary layers and shock bifurcations affect oblique detonation structures?";

/// Copies the review document and the first `gt` synthetic documents into `dir`.
pub fn copy_chain_corpus(fixtures: &Path, dir: &Path, gt: usize) {
    std::fs::copy(fixtures.join("chain/odw_review.txt"), dir.join("odw_review.txt")).unwrap();
    for i in 0..gt {
        let name = format!("gt{i:02}.txt");
        std::fs::copy(fixtures.join("gt_corpus").join(&name), dir.join(&name)).unwrap();
    }
}

pub const FABRICATED: &str = "Oblique Detonation Waves in Wedge Flows";

/// Records every prompt and answers through `reply`.
pub struct StubChat<F: Fn(&str) -> String + Send + Sync> {
    prompts: Mutex<Vec<String>>,
    reply: F,
}

impl<F: Fn(&str) -> String + Send + Sync> StubChat<F> {
    pub fn new(reply: F) -> Self {
        Self {
            prompts: Mutex::default(),
            reply,
        }
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }
}

impl<F: Fn(&str) -> String + Send + Sync> ChatModel for StubChat<F> {
    fn complete(&self, prompt: &str, _temperature: f64) -> Result<String, ChatError> {
        self.prompts.lock().unwrap().push(prompt.to_owned());
        Ok((self.reply)(prompt))
    }
}

/// `[label] entry` lines of the prompt's citation-list slot.
pub fn listed(prompt: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    let slot = prompt.rsplit_once("Citation List: ").map_or(prompt, |(_, s)| s);
    slot.lines()
        .filter(|l| l.starts_with('[') && l.contains("] "))
        .filter(|l| seen.insert(l.to_string()))
        .map(str::to_owned)
        .collect()
}

pub fn echo(prompt: &str) -> String {
    let mut out = String::from("The front attaches to the wedge tip for the cases considered.\n\nReferences\n");
    for line in listed(prompt) {
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("\nthanks for asking!");
    out
}

pub fn with_fabrication(prompt: &str) -> String {
    let mut out = echo(prompt);
    out = out.replace(
        "\nthanks for asking!",
        &format!(
            "Li, Kailasanath & Oran (1994): \"{FABRICATED}\". Combust Sci Technol 1994;96:57-73.\n\nthanks for asking!"
        ),
    );
    out
}

/// Answers under random chain configurations and checks every dispatched
/// prompt against the 4096-token limit. Returns how many trials shed chunks.
pub fn budget_trials(
    store: &VectorStore,
    aux: &dyn AuxProvider,
    emb: &HashingEmbedder,
    trials: usize,
    seed: u64,
) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shed_runs = 0;
    for trial in 0..trials {
        let chat = StubChat::new(echo);
        let tok = Tokenizer::new(TokenizerConfig::heuristic(rng.random_range(0.5..4.0))).unwrap();
        let engine = Engine {
            store,
            embedder: emb,
            chat: &chat,
            tokenizer: &tok,
            aux,
        };
        let mut c = ChainConfig {
            mode: [Mode::Mode1, Mode::Mode2, Mode::Plain][rng.random_range(0..3)],
            template: TemplateName::ALL[rng.random_range(0..TemplateName::ALL.len())],
            reserved_for_answer: rng.random_range(256..2048),
            ..ChainConfig::default()
        };
        c.retrieval.k = rng.random_range(1..=12);
        c.retrieval.use_mmr = rng.random_bool(0.5);
        c.retrieval.lambda = rng.random_range(0.0..=1.0);
        match engine.answer(QUESTION, &c) {
            Ok(b) => {
                let prompts = chat.prompts();
                if prompts.len() != 1 {
                    return Err(format!("trial {trial}: {} requests", prompts.len()));
                }
                let tokens = tok.count(&prompts[0]).unwrap();
                if tokens + c.reserved_for_answer > 4096 {
                    return Err(format!(
                        "trial {trial}: {tokens} + {} tokens sent",
                        c.reserved_for_answer
                    ));
                }
                if b.budget.prompt_tokens != tokens {
                    return Err(format!(
                        "trial {trial}: budget says {}, prompt has {tokens}",
                        b.budget.prompt_tokens
                    ));
                }
                if !b.dropped.is_empty() {
                    shed_runs += 1;
                    let kept_min = b.retrieved.iter().map(|h| h.score).fold(f64::INFINITY, f64::min);
                    if let Some(d) = b.dropped.iter().find(|d| d.score > kept_min) {
                        return Err(format!("trial {trial}: dropped {} above kept {kept_min}", d.score));
                    }
                }
            }
            Err(ChainError::BudgetExceeded {
                prompt_tokens,
                reserved,
                limit,
            }) => {
                if !chat.prompts().is_empty() || prompt_tokens + reserved <= limit {
                    return Err(format!("trial {trial}: bad budget refusal"));
                }
            }
            Err(e) => return Err(format!("trial {trial}: {e}")),
        }
    }
    Ok(shed_runs)
}
