//! Checking the citations in a generated answer against the citation list.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::markers::{author_year, expand_numbers, BRACKETED, GROUP, NARRATIVE, PARENTHETICAL};
use super::names::{contains_name, contains_year, first_year, leading_authors, surnames, word_set, SUR};
use super::CitationEntry;
use crate::ingest::Span;
use crate::text::{fold, folded_words, CharMap};

/// Minimum share of title words found in an entry for the title to count as matching.
pub const TITLE_OVERLAP: f64 = 0.6;

/// A citation-like string found in an answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerCitation {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub authors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagReason {
    /// Nothing in the citation list matches.
    NotInList,
    /// The label exists but names other authors, or the authors exist under another label.
    LabelConflict,
    /// The title is in the list but under other authors or another year.
    PartialTitleMatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifiedCitation {
    pub citation: AnswerCitation,
    pub entry: CitationEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedCitation {
    pub citation: AnswerCitation,
    pub reason: FlagReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub verified: Vec<VerifiedCitation>,
    pub flagged: Vec<FlaggedCitation>,
    pub pass: bool,
}

const BLOCK_HEADINGS: &[&str] = &[
    "references",
    "reference list",
    "bibliography",
    "research papers",
    "sources",
    "citations",
    "works cited",
    "cited works",
];

const TITLE_STOPWORDS: &[&str] = &[
    "the", "and", "for", "with", "from", "into", "over", "under", "via", "its", "their", "using", "based", "study",
    "analysis", "effect", "effects",
];

static COMBINED: LazyLock<Regex> = LazyLock::new(|| {
    let and = r"(?:\\?&|\band\b)";
    Regex::new(&format!(
        r"(?P<names>{SUR},?\s+et\s+al\.?|{SUR}(?:\s*,\s*{SUR})*\s*,?\s*{and}\s*{SUR}|{SUR})\s*(?P<group>{})",
        BRACKETED.as_str()
    ))
    .unwrap()
});

static TITLE_AFTER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"^\s*[:,\-–—]?\s*(?:"(?P<a>[^"\n]+)"|“(?P<b>[^”\n]+)”|'(?P<c>[^\n]+?)'(?:[^\p{L}]|$)|‘(?P<d>[^’\n]+)’)"#,
    )
    .unwrap()
});

static TITLE_BEFORE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?:"(?P<a>[^"\n]+)"|“(?P<b>[^”\n]+)”)\s*,?\s*by\s+[^\n]*$"#).unwrap());

static QUOTED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#""(?P<a>[^"\n]+)"|“(?P<b>[^”\n]+)”|‘(?P<d>[^’\n]+)’|(?:^|\s)'(?P<c>[^\n]+?)'(?:[^\p{L}]|$)"#).unwrap()
});

static BY_CLAUSE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\bby\s+(?P<names>.+?)(?:,?\s+et\s+al\b|,\s*published\b|\s*\(|\s+in\s|\.\s|$)").unwrap()
});

static ENUMERATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(?:[-*•]|\d{1,3}[.)])\s+").unwrap());

static BLOCK_LABEL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*\[(\d{1,3})\]\s*").unwrap());

fn quoted(c: &regex::Captures) -> Option<String> {
    ["a", "b", "c", "d"]
        .iter()
        .find_map(|k| c.name(k))
        .map(|m| m.as_str().trim().to_owned())
}

fn is_block_heading(line: &str) -> bool {
    let t = line
        .trim()
        .trim_matches(|c: char| c == '#' || c == '*' || c == '_')
        .trim()
        .trim_end_matches(':')
        .trim();
    BLOCK_HEADINGS.iter().any(|h| t.eq_ignore_ascii_case(h))
}

/// Byte offset where a trailing references block starts (after its heading line).
fn split_block(answer: &str) -> (usize, usize) {
    let mut offset = 0;
    let mut found = None;
    for line in answer.split_inclusive('\n') {
        if is_block_heading(line) {
            found = Some((offset, offset + line.len()));
        }
        offset += line.len();
    }
    found.unwrap_or((answer.len(), answer.len()))
}

/// Citation-like strings in `answer`, in order of appearance without repeats.
pub fn extract_answer_citations(answer: &str) -> Vec<AnswerCitation> {
    let map = CharMap::new(answer);
    let span = |a: usize, b: usize| Span::new(map.char_at_byte(a), map.char_at_byte(b));
    let (body_end, block_start) = split_block(answer);
    let body = &answer[..body_end];
    let mut out: Vec<AnswerCitation> = Vec::new();

    // "Name et al. [25, 26]": numeric labels that also name authors.
    let mut taken: Vec<(usize, usize)> = Vec::new();
    for c in COMBINED.captures_iter(body) {
        let authors = surnames(&c["names"]);
        if authors.is_empty() {
            continue;
        }
        let m = c.get(0).unwrap();
        let group = c.name("group").unwrap();
        taken.push((group.start(), group.end()));
        let inner = BRACKETED.captures(group.as_str()).unwrap();
        for n in expand_numbers(&inner[1]) {
            out.push(AnswerCitation {
                text: m.as_str().to_owned(),
                label: Some(n.to_string()),
                authors: authors.clone(),
                year: None,
                title: None,
                span: span(m.start(), m.end()),
            });
        }
    }
    for c in BRACKETED.captures_iter(body) {
        let m = c.get(0).unwrap();
        if taken.iter().any(|&(a, b)| a <= m.start() && m.end() <= b) {
            continue;
        }
        for n in expand_numbers(&c[1]) {
            out.push(AnswerCitation {
                text: m.as_str().to_owned(),
                label: Some(n.to_string()),
                authors: Vec::new(),
                year: None,
                title: None,
                span: span(m.start(), m.end()),
            });
        }
    }

    let with_title = |start: usize, end: usize| {
        TITLE_AFTER.captures(&body[end..]).and_then(|c| quoted(&c)).or_else(|| {
            let line_start = body[..start].rfind('\n').map_or(0, |i| i + 1);
            TITLE_BEFORE.captures(&body[line_start..start]).and_then(|c| quoted(&c))
        })
    };
    for c in NARRATIVE.captures_iter(body) {
        let m = c.get(0).unwrap();
        if let Some(marker) = author_year(&c["names"], &c["year"], span(m.start(), m.end())) {
            out.push(AnswerCitation {
                text: m.as_str().to_owned(),
                label: None,
                authors: marker.authors,
                year: marker.year,
                title: with_title(m.start(), m.end()),
                span: marker.span,
            });
        }
    }
    for c in PARENTHETICAL.captures_iter(body) {
        let m = c.get(0).unwrap();
        for group in c[1].split(';') {
            let Some(g) = GROUP.captures(group) else { continue };
            if let Some(marker) = author_year(&g["names"], &g["year"], span(m.start(), m.end())) {
                out.push(AnswerCitation {
                    text: group.trim().to_owned(),
                    label: None,
                    authors: marker.authors,
                    year: marker.year,
                    title: None,
                    span: marker.span,
                });
            }
        }
    }
    out.sort_by_key(|c| c.span.start);

    let mut offset = block_start;
    for line in answer[block_start..].split_inclusive('\n') {
        if let Some(c) = block_line(line, span(offset, offset + line.trim_end().len())) {
            out.push(c);
        }
        offset += line.len();
    }

    let mut seen = HashSet::new();
    out.retain(|c| {
        seen.insert((
            c.label.clone(),
            c.authors.iter().map(|a| fold(a)).collect::<Vec<_>>(),
            c.year,
            c.title.as_deref().map(fold),
        ))
    });
    out
}

fn block_line(line: &str, span: Span) -> Option<AnswerCitation> {
    let text = line.trim();
    if text.is_empty() {
        return None;
    }
    let (label, rest) = match BLOCK_LABEL.captures(text) {
        Some(c) => (
            Some(c[1].parse::<u32>().ok()?.to_string()),
            &text[c.get(0).unwrap().end()..],
        ),
        None => (None, ENUMERATION.find(text).map_or(text, |m| &text[m.end()..])),
    };
    let (title, without_title) = match QUOTED.captures(rest) {
        Some(c) => {
            let m = c.get(0).unwrap();
            (quoted(&c), format!("{} {}", &rest[..m.start()], &rest[m.end()..]))
        }
        None => (None, rest.to_owned()),
    };
    let mut authors = leading_authors(&without_title);
    if authors.is_empty() {
        if let Some(c) = BY_CLAUSE.captures(&without_title) {
            authors = surnames(&c["names"]);
        }
    }
    if authors.is_empty() {
        if let Some(c) = NARRATIVE.captures(&without_title) {
            authors = surnames(&c["names"]);
        }
    }
    if label.is_none() && authors.is_empty() && title.is_none() {
        return None;
    }
    Some(AnswerCitation {
        text: text.to_owned(),
        label,
        authors,
        year: first_year(&without_title),
        title,
        span,
    })
}

fn title_words(title: &str) -> Vec<String> {
    folded_words(title)
        .into_iter()
        .filter(|w| w.chars().count() >= 3 && !TITLE_STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// Share of the title's content words present in `words`.
fn title_overlap(title: &[String], words: &HashSet<String>) -> f64 {
    if title.is_empty() {
        return 0.0;
    }
    title.iter().filter(|w| words.contains(*w)).count() as f64 / title.len() as f64
}

/// Checks every citation in `answer` against `citation_list`.
pub fn verify_answer_citations(answer: &str, citation_list: &[CitationEntry]) -> VerificationReport {
    let words: Vec<HashSet<String>> = citation_list.iter().map(|e| word_set(&e.full_text)).collect();
    let by_authors = |c: &AnswerCitation, i: usize| {
        !c.authors.is_empty()
            && c.authors.iter().all(|a| contains_name(&words[i], a))
            && c.year.is_none_or(|y| contains_year(&citation_list[i].full_text, y))
    };
    let mut verified = Vec::new();
    let mut flagged = Vec::new();
    for citation in extract_answer_citations(answer) {
        let title = citation.title.as_deref().map(title_words).filter(|t| !t.is_empty());
        let title_ok = |i: usize| {
            title
                .as_ref()
                .is_some_and(|t| title_overlap(t, &words[i]) >= TITLE_OVERLAP)
        };
        // Without matching authors to lean on, only a complete title counts.
        let title_whole = |i: usize| title.as_ref().is_some_and(|t| title_overlap(t, &words[i]) == 1.0);
        let outcome: Result<usize, FlagReason> = if let Some(label) = &citation.label {
            // Lists merged from several documents can repeat a numeric label.
            let same: Vec<usize> = (0..citation_list.len())
                .filter(|&i| &citation_list[i].label == label)
                .collect();
            let authored: Vec<usize> = same
                .iter()
                .copied()
                .filter(|&i| citation.authors.is_empty() || by_authors(&citation, i))
                .collect();
            if same.is_empty() {
                if (0..citation_list.len()).any(|i| by_authors(&citation, i)) {
                    Err(FlagReason::LabelConflict)
                } else {
                    Err(FlagReason::NotInList)
                }
            } else if authored.is_empty() {
                Err(FlagReason::LabelConflict)
            } else if title.is_some() {
                authored
                    .iter()
                    .copied()
                    .find(|&i| title_ok(i))
                    .ok_or(FlagReason::PartialTitleMatch)
            } else {
                Ok(authored[0])
            }
        } else {
            let candidates: Vec<usize> = (0..citation_list.len()).filter(|&i| by_authors(&citation, i)).collect();
            match (&title, candidates.first()) {
                // A title found nowhere means the article does not exist; a title
                // found under other authors or another year is a misattribution.
                (Some(_), _) => match candidates.iter().copied().find(|&i| title_ok(i)) {
                    Some(i) => Ok(i),
                    None if citation.authors.is_empty() => (0..citation_list.len())
                        .find(|&i| title_whole(i))
                        .ok_or(FlagReason::NotInList),
                    None if (0..citation_list.len()).any(title_whole) => Err(FlagReason::PartialTitleMatch),
                    None => Err(FlagReason::NotInList),
                },
                (None, Some(&i)) => Ok(i),
                (None, None) => Err(FlagReason::NotInList),
            }
        };
        match outcome {
            Ok(i) => verified.push(VerifiedCitation {
                citation,
                entry: citation_list[i].clone(),
            }),
            Err(reason) => flagged.push(FlaggedCitation { citation, reason }),
        }
    }
    let pass = flagged.is_empty();
    VerificationReport {
        verified,
        flagged,
        pass,
    }
}
