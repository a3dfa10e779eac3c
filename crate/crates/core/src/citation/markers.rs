//! In-text citation marker extraction.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::names::{parse_year, surnames, SUR};
use super::CitationMarker;
use crate::ingest::Span;
use crate::text::CharMap;

/// Marker families, tried independently; results are merged in text order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    /// `[26]`, `[25, 26]`, `[27–28]`, `{3·5}`.
    Bracketed,
    /// `X¹`, `X²⁻⁴`.
    Superscript,
    /// `Name et al. (2001)`, `A & B (2001)`, `A, B and C (2001)`, `Name (2001)`.
    Narrative,
    /// `(Name et al., 2001; A & B 2003)`.
    Parenthetical,
}

pub const DEFAULT_PATTERNS: [PatternKind; 4] = [
    PatternKind::Bracketed,
    PatternKind::Superscript,
    PatternKind::Narrative,
    PatternKind::Parenthetical,
];

/// Hyphen variants accepted inside ranges.
const DASH: &str = r"[-‐‑‒–—−]";
const NUM_SEP: &str = r"[,;·]";
const MAX_RANGE: u32 = 200;

pub(crate) static BRACKETED: LazyLock<Regex> = LazyLock::new(|| {
    let item = format!(r"\d{{1,3}}(?:\s*{DASH}\s*\d{{1,3}})?");
    Regex::new(&format!(r"[\[{{]\s*({item}(?:\s*{NUM_SEP}\s*{item})*)\s*[\]}}]")).unwrap()
});

static SUPERSCRIPT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[^\s\d⁰¹²³⁴⁵⁶⁷⁸⁹]([⁰¹²³⁴⁵⁶⁷⁸⁹]+(?:[,˒⁻‐–-][⁰¹²³⁴⁵⁶⁷⁸⁹]+)*)").unwrap());

pub(crate) static NARRATIVE: LazyLock<Regex> = LazyLock::new(|| {
    let and = r"(?:\\?&|\band\b)";
    let names = format!(r"(?:{SUR},?\s+et\s+al\.?|{SUR}(?:\s*,\s*{SUR})*\s*,?\s*{and}\s*{SUR}|{SUR})");
    Regex::new(&format!(r"(?P<names>{names}),?\s*\(\s*(?P<year>\d{{4}})[a-z]?\s*\)")).unwrap()
});

static PAREN_GROUP: &str = r"(?:\p{Lu}[^();]*?),?\s+\d{4}[a-z]?";

pub(crate) static PARENTHETICAL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"\(\s*({PAREN_GROUP}(?:\s*;\s*{PAREN_GROUP})*)\s*\)")).unwrap());

pub(crate) static GROUP: LazyLock<Regex> = LazyLock::new(|| {
    let and = r"(?:\\?&|\band\b)";
    let sep = format!(r"(?:\s*,\s*{and}?\s*|\s+{and}\s+|\s*{and}\s*)");
    Regex::new(&format!(
        r"^\s*(?P<names>{SUR}(?:,?\s+et\s+al\.?|(?:{sep}{SUR})*))\s*,?\s*(?P<year>\d{{4}})[a-z]?\s*$"
    ))
    .unwrap()
});

/// Extracts markers with the default pattern set.
pub fn extract_citation_markers(text: &str) -> Vec<CitationMarker> {
    extract_with(text, &DEFAULT_PATTERNS)
}

/// Extracts markers with the given pattern families, in order of appearance,
/// keeping only the first occurrence of each cited work.
pub fn extract_with(text: &str, patterns: &[PatternKind]) -> Vec<CitationMarker> {
    let map = CharMap::new(text);
    let span = |start: usize, end: usize| Span::new(map.char_at_byte(start), map.char_at_byte(end));
    let mut found: Vec<CitationMarker> = Vec::new();
    for kind in patterns {
        match kind {
            PatternKind::Bracketed => {
                for c in BRACKETED.captures_iter(text) {
                    let m = c.get(0).unwrap();
                    let s = span(m.start(), m.end());
                    found.extend(expand_numbers(&c[1]).into_iter().map(|n| CitationMarker::numeric(n, s)));
                }
            }
            PatternKind::Superscript => {
                for c in SUPERSCRIPT.captures_iter(text) {
                    let m = c.get(1).unwrap();
                    let s = span(m.start(), m.end());
                    let plain: String = m.as_str().chars().map(desuperscript).collect();
                    found.extend(
                        expand_numbers(&plain)
                            .into_iter()
                            .map(|n| CitationMarker::numeric(n, s)),
                    );
                }
            }
            PatternKind::Narrative => {
                for c in NARRATIVE.captures_iter(text) {
                    let m = c.get(0).unwrap();
                    if let Some(marker) = author_year(&c["names"], &c["year"], span(m.start(), m.end())) {
                        found.push(marker);
                    }
                }
            }
            PatternKind::Parenthetical => {
                for c in PARENTHETICAL.captures_iter(text) {
                    let m = c.get(0).unwrap();
                    let s = span(m.start(), m.end());
                    for group in c[1].split(';') {
                        if let Some(g) = GROUP.captures(group) {
                            found.extend(author_year(&g["names"], &g["year"], s));
                        }
                    }
                }
            }
        }
    }
    // Stable sort keeps bracket groups in their written order.
    found.sort_by_key(|m| m.span.start);
    let mut seen = HashSet::new();
    found.retain(|m| seen.insert(m.key()));
    found
}

pub(crate) fn author_year(names: &str, year: &str, span: Span) -> Option<CitationMarker> {
    let year = parse_year(year)?;
    let authors = surnames(names);
    (!authors.is_empty()).then(|| CitationMarker::author_year(authors, year, span))
}

fn desuperscript(c: char) -> char {
    match c {
        '⁰' => '0',
        '¹' => '1',
        '²' => '2',
        '³' => '3',
        '⁴' => '4',
        '⁵' => '5',
        '⁶' => '6',
        '⁷' => '7',
        '⁸' => '8',
        '⁹' => '9',
        '˒' => ',',
        '⁻' => '-',
        other => other,
    }
}

/// `"25, 27–29"` → `[25, 27, 28, 29]`. Zero is dropped; reversed or very
/// long ranges keep only their endpoints.
pub(crate) fn expand_numbers(group: &str) -> Vec<u32> {
    static ITEM: LazyLock<Regex> = LazyLock::new(|| Regex::new(&format!(r"(\d+)(?:\s*{DASH}\s*(\d+))?")).unwrap());
    let mut out = Vec::new();
    for c in ITEM.captures_iter(group) {
        let Ok(a) = c[1].parse::<u32>() else { continue };
        match c.get(2).and_then(|b| b.as_str().parse::<u32>().ok()) {
            Some(b) if a <= b && b - a <= MAX_RANGE => out.extend(a..=b),
            Some(b) => out.extend([a, b]),
            None => out.push(a),
        }
    }
    out.retain(|&n| n > 0);
    out
}
