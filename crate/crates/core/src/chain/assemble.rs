//! Combining retrieved text with its citation list.

use crate::citation::{format_citation_list, CitationEntry};
use crate::ingest::Chunk;
use crate::store::ChunkRecord;

/// Line separating chunk text from its citation block in mode I.
pub const CITATION_DELIMITER: &str = "--- Citation List ---";
/// Stands in for an empty citation block in mode I.
pub const EMPTY_BLOCK: &str = "(no citations)";

/// Mode I: the chunk text followed by a delimited citation block, as one context string.
pub fn assemble_mode1(original: &ChunkRecord, citation_list: &[CitationEntry]) -> String {
    assemble_text(&original.text, citation_list)
}

pub(crate) fn assemble_text(text: &str, citation_list: &[CitationEntry]) -> String {
    let block = if citation_list.is_empty() {
        EMPTY_BLOCK.to_owned()
    } else {
        format_citation_list(citation_list)
    };
    format!("{text}\n\n{CITATION_DELIMITER}\n{block}")
}

/// Mode II: the expanded chunk as context and the citation block kept apart
/// for the `{citation-list}` slot. The expanded chunk contains the original,
/// so it replaces it.
pub fn assemble_mode2(_original: &ChunkRecord, expanded: &Chunk, citation_list: &[CitationEntry]) -> (String, String) {
    (expanded.text.clone(), format_citation_list(citation_list))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbeddingVector;

    fn record(text: &str) -> ChunkRecord {
        let chunk = Chunk {
            chunk_id: "d#00000".into(),
            doc_id: "d".into(),
            text: text.into(),
            start_offset: 0,
            end_offset: text.chars().count(),
        };
        ChunkRecord::from_chunk(&chunk, EmbeddingVector::new(vec![1.0]).unwrap(), "d.txt")
    }

    fn entries(n: usize) -> Vec<CitationEntry> {
        (1..=n)
            .map(|i| CitationEntry {
                label: i.to_string(),
                full_text: format!("Entry {i}."),
                doc_id: "d".into(),
            })
            .collect()
    }

    #[test]
    fn mode1_structure() {
        assert_eq!(
            assemble_mode1(&record("T"), &entries(2)),
            "T\n\n--- Citation List ---\n[1] Entry 1.\n[2] Entry 2."
        );
        assert_eq!(
            assemble_mode1(&record("T"), &[]),
            "T\n\n--- Citation List ---\n(no citations)"
        );
    }

    #[test]
    fn mode2_keeps_block_apart() {
        let original = record("T");
        let expanded = Chunk {
            chunk_id: "d~x00".into(),
            doc_id: "d".into(),
            text: "x".repeat(3800),
            start_offset: 0,
            end_offset: 3800,
        };
        let (context, block) = assemble_mode2(&original, &expanded, &entries(8));
        assert_eq!(context.chars().count(), 3800);
        assert_eq!(block.lines().count(), 8);
        assert!(!context.contains(&block));
        let (context, block) = assemble_mode2(&original, &expanded, &[]);
        assert_eq!(context, expanded.text);
        assert!(block.is_empty());
    }
}
