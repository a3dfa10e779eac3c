//! Scores marker extraction and resolution against the annotated synthetic corpus.

use std::collections::BTreeSet;
use std::path::Path;

use litrag::citation::{
    extract_citation_markers, extract_reference_section, resolve_citations, CitationMarker, MarkerKind,
};
use litrag::ingest::Document;
use litrag::text::{collapse_whitespace, fold};
use serde::Deserialize;

#[derive(Deserialize)]
struct Truth {
    documents: Vec<TruthDoc>,
}

#[derive(Deserialize)]
struct TruthDoc {
    doc_id: String,
    file: String,
    citations: Vec<TruthCitation>,
}

#[derive(Deserialize)]
struct TruthCitation {
    marker: String,
    entry: String,
}

fn marker_key(m: &CitationMarker) -> String {
    match m.kind {
        MarkerKind::Numeric => format!("n:{}", m.numbers[0]),
        MarkerKind::AuthorYear => {
            let names: Vec<String> = m.authors.iter().map(|a| fold(a)).collect();
            format!("ay:{}:{}", names.join("|"), m.year.unwrap())
        }
    }
}

/// Precision, recall and soundness violations over the synthetic corpus.
pub fn score_gt_corpus(fixtures: &Path) -> (f64, f64, usize) {
    let raw = std::fs::read_to_string(fixtures.join("gt_truth.json")).unwrap();
    let truth: Truth = serde_json::from_str(&raw).unwrap();
    let (mut tp, mut predicted, mut expected, mut unsound) = (0usize, 0usize, 0usize, 0usize);
    for td in &truth.documents {
        let path = fixtures.join("gt_corpus").join(&td.file);
        let text = std::fs::read_to_string(&path).unwrap();
        let doc = Document::from_text(td.doc_id.clone(), path, &text);
        let section = collapse_whitespace(doc.reference_text().unwrap());
        let refs_start = doc.reference_section.unwrap().start;
        let body: String = doc.body.chars().take(refs_start).collect();
        let entries = extract_reference_section(&doc).unwrap();

        let mut got = BTreeSet::new();
        for m in extract_citation_markers(&body) {
            for e in resolve_citations(std::slice::from_ref(&m), &entries).citation_list {
                if !section.contains(&collapse_whitespace(&e.full_text)) {
                    unsound += 1;
                }
                got.insert((marker_key(&m), e.full_text));
            }
        }
        let want: BTreeSet<(String, String)> = td
            .citations
            .iter()
            .map(|c| (c.marker.clone(), c.entry.clone()))
            .collect();
        tp += got.intersection(&want).count();
        predicted += got.len();
        expected += want.len();
    }
    (tp as f64 / predicted as f64, tp as f64 / expected as f64, unsound)
}
