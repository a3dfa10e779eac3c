//! Splitting a reference section into entries.

use std::sync::LazyLock;

use regex::Regex;

use super::names::{first_year, format_authors, leading_authors, AUTHOR_LIST_RE};
use super::{CitationEntry, CitationError};
use crate::ingest::{is_reference_heading, Document};
use crate::text::collapse_whitespace;

/// `26. `, `[26] `, `26] `. At most three digits so years never look like labels.
static LABEL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*\[?(\d{1,3})[\].]\s+").unwrap());

static CROSSREF: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?:\s*\[CrossRef\]\s*)+").unwrap());

/// Entries of the document's reference section, in order.
pub fn extract_reference_section(doc: &Document) -> Result<Vec<CitationEntry>, CitationError> {
    let text = doc
        .reference_text()
        .ok_or_else(|| CitationError::NoReferenceSection(doc.doc_id.clone()))?;
    Ok(parse_reference_entries(text, &doc.doc_id))
}

struct Pending<'a> {
    label: Option<String>,
    lines: Vec<&'a str>,
}

/// Splits bibliography text into entries.
///
/// A line opening with a numeric label starts a labeled entry. Otherwise a
/// blank line, or a non-indented line opening with an author list while the
/// current entry is unlabeled, starts a new entry. Everything else continues
/// the current entry. Unlabeled entries get a label derived from their
/// authors and year (`Maeda, Kasahara & Matsuo (2012)`), or `ref-n`.
pub fn parse_reference_entries(section: &str, doc_id: &str) -> Vec<CitationEntry> {
    let mut pending: Vec<Pending> = Vec::new();
    let mut open = false;
    for line in section.lines() {
        if line.trim().is_empty() {
            open = false;
            continue;
        }
        if is_reference_heading(line) {
            open = false;
            continue;
        }
        if let Some(c) = LABEL.captures(line) {
            let label = c[1]
                .parse::<u32>()
                .map(|n| n.to_string())
                .unwrap_or_else(|_| c[1].to_owned());
            pending.push(Pending {
                label: Some(label),
                lines: vec![&line[c.get(0).unwrap().end()..]],
            });
            open = true;
            continue;
        }
        let starts_entry = match pending.last() {
            Some(cur) if open => {
                cur.label.is_none() && !line.starts_with(char::is_whitespace) && AUTHOR_LIST_RE.is_match(line)
            }
            _ => true,
        };
        if starts_entry {
            pending.push(Pending {
                label: None,
                lines: vec![line],
            });
            open = true;
        } else if let Some(cur) = pending.last_mut() {
            cur.lines.push(line);
        }
    }

    pending
        .into_iter()
        .map(|p| (p.label, collapse_whitespace(&p.lines.join("\n"))))
        .filter(|(_, text)| !text.is_empty())
        .enumerate()
        .map(|(i, (label, full_text))| CitationEntry {
            label: label.unwrap_or_else(|| derive_label(&full_text, i + 1)),
            full_text,
            doc_id: doc_id.to_owned(),
        })
        .collect()
}

fn derive_label(text: &str, ordinal: usize) -> String {
    let body = CROSSREF.replace(text, "");
    let authors = leading_authors(&body);
    match (authors.is_empty(), first_year(&body)) {
        (false, Some(year)) => format!("{} ({year})", format_authors(&authors)),
        _ => format!("ref-{ordinal}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_entries() {
        let section = "References\n25. Gamezo V.N., Oran E.S. Shock bifurcations.\n   Combust. Flame 2001.\n26. Other A. Title. 2002.\n";
        let e = parse_reference_entries(section, "d");
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].label, "25");
        assert_eq!(
            e[0].full_text,
            "Gamezo V.N., Oran E.S. Shock bifurcations. Combust. Flame 2001."
        );
        assert_eq!(e[1].label, "26");
    }

    #[test]
    fn bracketed_and_partial_labels() {
        let e = parse_reference_entries("[36] McBride BJ. NASA Glenn.\n25] Gamezo VN. DDT.\n", "d");
        let labels: Vec<_> = e.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(labels, ["36", "25"]);
    }

    #[test]
    fn hanging_indent_author_year() {
        let section = "Maeda, S., J. Kasahara, and A. Matsuo. 2012. Oblique detonation wave stability.\n\
                       Miao, S., J. Zhou, S. Liu, and X. Cai. 2018. Formation mechanisms\n    \
                       of transition patterns.\n\
                       Silva, L. F. F. D., and B. Deshaies. 2000. Stabilization of an oblique detonation wave by a wedge:\n\
                       a parametric numerical study.\n";
        let e = parse_reference_entries(section, "d");
        let labels: Vec<_> = e.iter().map(|e| e.label.as_str()).collect();
        assert_eq!(
            labels,
            [
                "Maeda, Kasahara & Matsuo (2012)",
                "Miao et al. (2018)",
                "Silva & Deshaies (2000)"
            ]
        );
        assert!(e[2].full_text.ends_with("wedge: a parametric numerical study."));
    }

    #[test]
    fn underivable_labels_fall_back_to_ordinal() {
        let e = parse_reference_entries("26(2):3023e31.\n\n30] Fusina G. Numerical investigation\n", "d");
        assert_eq!(e[0].label, "ref-1");
        assert_eq!(e[1].label, "30");
    }

    #[test]
    fn missing_section() {
        let doc = Document::from_text("x", "x.txt", "Title\n\nNo bibliography here.");
        assert_eq!(
            extract_reference_section(&doc),
            Err(CitationError::NoReferenceSection("x".into()))
        );
    }
}
