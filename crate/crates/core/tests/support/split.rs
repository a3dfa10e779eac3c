//! Splitter invariants, usable from proptest and from plain loops.

use litrag::ingest::{recursive_split, split_spans, Span, SplitParams};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

/// Characters the default separators may leave between chunks.
pub const SEPARATOR_CHARS: [char; 3] = ['\n', ' ', '.'];

/// Checks chunk text against the source, length, order and coverage. With
/// zero overlap, also checks that chunks plus separator gaps rebuild the body.
pub fn check_split(body: &str, size: usize, overlap: usize) -> Result<Vec<Span>, String> {
    let params = SplitParams::new(size, overlap).map_err(|e| e.to_string())?;
    let chars: Vec<char> = body.chars().collect();
    let spans = split_spans(body, &params).map_err(|e| e.to_string())?;
    let chunks = recursive_split("d", body, &params).map_err(|e| e.to_string())?;
    if chunks.len() != spans.len() {
        return Err(format!("{} chunks for {} spans", chunks.len(), spans.len()));
    }
    for c in &chunks {
        let slice: String = chars[c.start_offset..c.end_offset].iter().collect();
        if c.text != slice || !body.contains(&c.text) {
            return Err(format!("chunk {} is not its source slice", c.chunk_id));
        }
    }
    let mut covered = vec![false; chars.len()];
    for (i, s) in spans.iter().enumerate() {
        if s.is_empty() || s.len() > size || s.end > chars.len() {
            return Err(format!("bad span {s:?} for size {size}"));
        }
        if i > 0 && !(s.start > spans[i - 1].start && s.end > spans[i - 1].end) {
            return Err(format!("out of order at {i}"));
        }
        covered[s.start..s.end].iter_mut().for_each(|c| *c = true);
    }
    if let Some(i) = (0..chars.len()).find(|&i| !covered[i] && !SEPARATOR_CHARS.contains(&chars[i])) {
        return Err(format!("content char {:?} at {i} not covered", chars[i]));
    }
    if overlap == 0 {
        let mut rebuilt = String::new();
        let mut at = 0;
        for s in &spans {
            if s.start < at {
                return Err("chunks overlap with zero overlap".into());
            }
            rebuilt.extend(&chars[at..s.start]);
            rebuilt.extend(&chars[s.start..s.end]);
            at = s.end;
        }
        rebuilt.extend(&chars[at..]);
        if rebuilt != body {
            return Err("zero-overlap chunks do not rebuild the body".into());
        }
    }
    Ok(spans)
}

fn random_word(rng: &mut ChaCha8Rng) -> String {
    let (lo, hi) = match rng.random_range(0..10) {
        0 => (40, 160),
        _ => (1, 9),
    };
    let mut w: String = (0..rng.random_range(lo..=hi))
        .map(|_| (b'a' + rng.random_range(0..26u8)) as char)
        .collect();
    if rng.random_range(0..10) == 0 {
        w[..1].make_ascii_uppercase();
        w.push('é');
    }
    w
}

/// Paragraphs of sentences, joined the way the separators expect.
pub fn random_document(rng: &mut ChaCha8Rng) -> String {
    let paragraphs: Vec<String> = (0..rng.random_range(1..8))
        .map(|_| {
            let sentences: Vec<String> = (0..rng.random_range(1..6))
                .map(|_| {
                    (0..rng.random_range(1..14))
                        .map(|_| random_word(rng))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            sentences.join(if rng.random_bool(0.5) { ".\n" } else { ". " })
        })
        .collect();
    paragraphs.join("\n\n")
}
