//! Shared name and year patterns.

use std::collections::HashSet;
use std::sync::LazyLock;

use regex::Regex;

use crate::text::folded_words;

/// A capitalized surname with at least one lowercase letter (`Li`, `McBride`, `Smith-Jones`).
pub(crate) const SUR: &str = r"\b\p{Lu}[\p{L}'’]*\p{Ll}[\p{L}'’]*(?:-\p{Lu}[\p{L}'’]*\p{Ll}[\p{L}'’]*)?";

/// Initials: `V.B.`, `S. K.`, `H.-J.` or a bare capital block as in `Gamezo VN`.
const INIT: &str = r"(?:(?:\p{Lu}\.\s?-?)+|\p{Lu}{1,3}\b)";

/// Capitalized words that open sentences rather than name authors.
const STOPWORDS: &[&str] = &[
    "According",
    "Additionally",
    "After",
    "Also",
    "Although",
    "And",
    "As",
    "Based",
    "Both",
    "But",
    "By",
    "Chapter",
    "Eq",
    "Equation",
    "Fig",
    "Figure",
    "First",
    "Following",
    "For",
    "From",
    "Further",
    "Furthermore",
    "Here",
    "However",
    "If",
    "In",
    "Indeed",
    "It",
    "Its",
    "Later",
    "Like",
    "Moreover",
    "Notably",
    "Our",
    "Previous",
    "Recent",
    "Recently",
    "Ref",
    "Refs",
    "Section",
    "See",
    "Similarly",
    "Since",
    "So",
    "Study",
    "Table",
    "That",
    "The",
    "Their",
    "Then",
    "There",
    "These",
    "This",
    "Those",
    "Thus",
    "To",
    "Unlike",
    "We",
    "When",
    "Where",
    "While",
    "With",
    "Work",
    "Yet",
];

pub(crate) static SUR_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(SUR).unwrap());

static UNIT_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"(?:(?P<a>{SUR}),?\s+{INIT}|{INIT}\s*(?P<b>{SUR}))")).unwrap());

/// Leading author list of a bibliography entry.
pub(crate) static AUTHOR_LIST_RE: LazyLock<Regex> = LazyLock::new(|| {
    let unit = format!(r"(?:{SUR},?\s+{INIT}|{INIT}\s*{SUR})");
    let sep = r"(?:\s*,\s*and\s+|\s*;\s*(?:and\s+)?|\s*,\s*(?:&\s*)?|\s+and\s+|\s*\\?&\s*)";
    Regex::new(&format!(r"^\s*\[?\s*{unit}(?:{sep}{unit})*(?:,?\s+et\s+al\.?)?")).unwrap()
});

pub(crate) static YEAR_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(1[89]\d\d|20\d\d|2100)[a-z]?\b").unwrap());

pub(crate) fn is_stopword(word: &str) -> bool {
    STOPWORDS.contains(&word)
}

/// Surnames in a free-form name list such as `Li, Kailasanath \& Oran`.
pub(crate) fn surnames(text: &str) -> Vec<String> {
    SUR_RE
        .find_iter(text)
        .map(|m| m.as_str().to_owned())
        .filter(|w| !is_stopword(w))
        .collect()
}

/// Surnames from the leading author list of a bibliography entry.
pub(crate) fn leading_authors(entry: &str) -> Vec<String> {
    let Some(list) = AUTHOR_LIST_RE.find(entry) else {
        return Vec::new();
    };
    UNIT_RE
        .captures_iter(list.as_str())
        .filter_map(|c| c.name("a").or_else(|| c.name("b")))
        .map(|m| m.as_str().to_owned())
        .collect()
}

pub(crate) fn parse_year(text: &str) -> Option<u16> {
    text.parse().ok().filter(|y| (1800..=2100).contains(y))
}

pub(crate) fn first_year(text: &str) -> Option<u16> {
    YEAR_RE.captures_iter(text).find_map(|c| parse_year(&c[1]))
}

/// `A`, `A & B`, `A, B & C`, `A et al.`
pub(crate) fn format_authors(authors: &[String]) -> String {
    match authors {
        [] => String::new(),
        [a] => a.clone(),
        [a, b] => format!("{a} & {b}"),
        [a, b, c] => format!("{a}, {b} & {c}"),
        [a, ..] => format!("{a} et al."),
    }
}

/// Folded word set of a text, for whole-word containment checks.
pub(crate) fn word_set(text: &str) -> HashSet<String> {
    folded_words(text).into_iter().collect()
}

/// Whether every word of `name` occurs in `words`.
pub(crate) fn contains_name(words: &HashSet<String>, name: &str) -> bool {
    let parts = folded_words(name);
    !parts.is_empty() && parts.iter().all(|p| words.contains(p))
}

pub(crate) fn contains_year(text: &str, year: u16) -> bool {
    YEAR_RE.captures_iter(text).any(|c| parse_year(&c[1]) == Some(year))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_author_lists() {
        let cases: &[(&str, &[&str])] = &[
            (
                "Maeda, S., J. Kasahara, and A. Matsuo. 2012. Oblique",
                &["Maeda", "Kasahara", "Matsuo"],
            ),
            ("Teng H, Ng HD, Jiang Z. Initiation", &["Teng", "Ng", "Jiang"]),
            (
                "Betelin, V.B.; Nikitin, V.F.; Smirnov, N.N. Using GPUs",
                &["Betelin", "Nikitin", "Smirnov"],
            ),
            (
                "Silva, L. F. F. D., and B. Deshaies. 2000. Stabilization",
                &["Silva", "Deshaies"],
            ),
            (
                "[Spalart, P., and S. Allmaras. 1992. A one-equation",
                &["Spalart", "Allmaras"],
            ),
            ("Li, J.; Ning, J. Experimental and numerical", &["Li", "Ning"]),
        ];
        for (entry, want) in cases {
            assert_eq!(leading_authors(entry), *want, "{entry}");
        }
    }

    #[test]
    fn years() {
        assert_eq!(first_year("Oran 1993b, vol 12"), Some(1993));
        assert_eq!(first_year("page 1750 only"), None);
        assert!(contains_year("Proc. 2017;36(2)", 2017));
    }

    #[test]
    fn author_formatting() {
        let v = |s: &[&str]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(
            format_authors(&v(&["Li", "Kailasanath", "Oran"])),
            "Li, Kailasanath & Oran"
        );
        assert_eq!(format_authors(&v(&["A", "B", "C", "D"])), "A et al.");
    }
}
