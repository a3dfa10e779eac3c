//! Character-offset bookkeeping and text normalization shared across modules.
//!
//! All offsets in this crate count Unicode scalar values, never bytes.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// Maps character indices of one string to byte indices.
#[derive(Debug, Clone)]
pub struct CharMap {
    // offsets[i] is the byte index of char i; the last entry is the byte length.
    offsets: Vec<usize>,
}

impl CharMap {
    pub fn new(text: &str) -> Self {
        let mut offsets: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        offsets.push(text.len());
        Self { offsets }
    }

    /// Number of characters in the mapped string.
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Byte index of the character at `char_idx` (or the end when equal to `len()`).
    pub fn byte(&self, char_idx: usize) -> usize {
        self.offsets[char_idx]
    }

    /// Character index of a byte position that lies on a char boundary.
    pub fn char_at_byte(&self, byte: usize) -> usize {
        match self.offsets.binary_search(&byte) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    /// Slices `text` (the string this map was built from) by character offsets.
    pub fn slice<'a>(&self, text: &'a str, start: usize, end: usize) -> &'a str {
        &text[self.byte(start)..self.byte(end)]
    }
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Slices by character offsets without a prebuilt map. `None` when out of range.
pub fn slice_chars(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut iter = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let begin = iter.nth(start)?;
    let finish = if end == start {
        begin
    } else {
        iter.nth(end - start - 1)?
    };
    Some(&text[begin..finish])
}

/// Collapses every whitespace run to one space and trims the ends.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Lowercases and strips diacritics (NFD, then drop combining marks).
pub fn fold(text: &str) -> String {
    text.nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .map(|c| match c {
            'ø' => 'o',
            'ł' => 'l',
            'đ' => 'd',
            'ß' => 's',
            'æ' => 'a',
            other => other,
        })
        .collect()
}

/// Lowercased, diacritic-folded alphanumeric words.
pub fn folded_words(text: &str) -> Vec<String> {
    fold(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Normalizes line endings to `\n`.
pub fn normalize_newlines(text: &str) -> String {
    if !text.contains('\r') {
        return text.to_owned();
    }
    text.replace("\r\n", "\n").replace('\r', "\n")
}
