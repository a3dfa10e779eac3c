//! Synthetic corpora and reference checks shared by the integration and
//! acceptance tests. Each test target uses a different subset.
#![allow(dead_code)]

pub mod chat;
pub mod gt;
pub mod metric_oracle;
pub mod oracle;
pub mod split;
pub mod store;

use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shape of a generated corpus.
#[derive(Debug, Clone, Copy)]
pub struct CorpusSpec {
    pub documents: usize,
    /// Approximate length of each document in characters.
    pub doc_chars: usize,
    /// Words private to each document.
    pub vocabulary: usize,
    /// Words every document draws from.
    pub shared_vocabulary: usize,
    /// Probability that a word comes from the shared vocabulary.
    pub shared_share: f64,
    /// Private words are drawn from a window of this many words that slides
    /// through the vocabulary over the document, so neighbouring passages
    /// share more words than distant ones.
    pub window: usize,
    /// Inclusive range of sentences per paragraph. Paragraphs well over the
    /// sweep chunk sizes keep the splitter at sentence level, where the
    /// chunk counts respond smoothly to size and overlap.
    pub paragraph_sentences: (usize, usize),
    pub seed: u64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            documents: 6,
            doc_chars: 9000,
            vocabulary: 80,
            shared_vocabulary: 40,
            shared_share: 0.3,
            window: 20,
            paragraph_sentences: (20, 30),
            seed: 17,
        }
    }
}

fn word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(4..=9);
    (0..n).map(|_| (b'a' + rng.random_range(0..26u8)) as char).collect()
}

/// Writes `doc00.txt`, `doc01.txt`, ... into `dir`. Vocabularies are disjoint
/// between documents apart from the shared pool.
pub fn write_corpus(dir: &Path, spec: &CorpusSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut used = std::collections::HashSet::new();
    let mut fresh = |rng: &mut ChaCha8Rng, n: usize| -> Vec<String> {
        let mut out = Vec::new();
        while out.len() < n {
            let w = word(rng);
            if used.insert(w.clone()) {
                out.push(w);
            }
        }
        out
    };
    let shared = fresh(&mut rng, spec.shared_vocabulary);
    for d in 0..spec.documents {
        let own = fresh(&mut rng, spec.vocabulary);
        let mut text = format!("Title: Document {d}\n\n");
        let window = spec.window.clamp(1, own.len());
        while text.len() < spec.doc_chars {
            let progress = text.len() as f64 / spec.doc_chars as f64;
            let lo = ((own.len() - window) as f64 * progress) as usize;
            let own = &own[lo..lo + window];
            let sentences = rng.random_range(spec.paragraph_sentences.0..=spec.paragraph_sentences.1);
            for s in 0..sentences {
                let words = rng.random_range(8..=16);
                let mut sentence: Vec<&str> = Vec::with_capacity(words);
                for _ in 0..words {
                    let pool = if !shared.is_empty() && rng.random_bool(spec.shared_share) {
                        &shared[..]
                    } else {
                        own
                    };
                    sentence.push(&pool[rng.random_range(0..pool.len())]);
                }
                let mut s_text = sentence.join(" ");
                s_text[..1].make_ascii_uppercase();
                text.push_str(&s_text);
                text.push_str(if s + 1 == sentences { "." } else { ". " });
            }
            text.push_str("\n\n");
        }
        std::fs::write(dir.join(format!("doc{d:02}.txt")), text.trim_end()).unwrap();
    }
}
