//! Matching markers to bibliography entries.

use serde::{Deserialize, Serialize};

use super::names::{contains_name, contains_year, leading_authors, word_set};
use super::{CitationEntry, CitationMarker, MarkerKind};
use crate::text::fold;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Resolved entries, first resolution first, without repeats.
    pub citation_list: Vec<CitationEntry>,
    pub unresolved: Vec<CitationMarker>,
}

/// Resolves each marker to entries of `entries`.
///
/// Numeric markers match by label. Author-year markers match entries whose
/// text contains every surname and the year, compared case- and
/// diacritic-insensitively. When several entries qualify, the one whose first
/// listed author is the marker's first author wins; if that still leaves a
/// choice between different texts the marker stays unresolved.
pub fn resolve_citations(markers: &[CitationMarker], entries: &[CitationEntry]) -> Resolution {
    let words: Vec<_> = entries.iter().map(|e| word_set(&e.full_text)).collect();
    let mut out = Resolution::default();
    let push = |out: &mut Resolution, e: &CitationEntry| {
        if !out.citation_list.contains(e) {
            out.citation_list.push(e.clone());
        }
    };
    for marker in markers {
        match marker.kind {
            MarkerKind::Numeric => {
                let hits: Vec<&CitationEntry> = marker
                    .numbers
                    .iter()
                    .filter_map(|n| {
                        let label = n.to_string();
                        entries.iter().find(|e| e.label == label)
                    })
                    .collect();
                if marker.numbers.is_empty() || hits.len() < marker.numbers.len() {
                    out.unresolved.push(marker.clone());
                } else {
                    hits.into_iter().for_each(|e| push(&mut out, e));
                }
            }
            MarkerKind::AuthorYear => match resolve_author_year(marker, entries, &words) {
                Some(i) => push(&mut out, &entries[i]),
                None => out.unresolved.push(marker.clone()),
            },
        }
    }
    out
}

fn resolve_author_year(
    marker: &CitationMarker,
    entries: &[CitationEntry],
    words: &[std::collections::HashSet<String>],
) -> Option<usize> {
    let year = marker.year?;
    if marker.authors.is_empty() {
        return None;
    }
    let candidates: Vec<usize> = (0..entries.len())
        .filter(|&i| {
            marker.authors.iter().all(|a| contains_name(&words[i], a)) && contains_year(&entries[i].full_text, year)
        })
        .collect();
    let pick = |c: &[usize]| match c {
        [one] => Some(*one),
        [first, rest @ ..] if rest.iter().all(|&i| entries[i].full_text == entries[*first].full_text) => Some(*first),
        _ => None,
    };
    if candidates.len() <= 1 {
        return candidates.first().copied();
    }
    let lead = fold(&marker.authors[0]);
    let led: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&i| {
            leading_authors(&entries[i].full_text)
                .first()
                .is_some_and(|a| fold(a) == lead)
        })
        .collect();
    pick(&led).or_else(|| pick(&candidates))
}
