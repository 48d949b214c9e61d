//! Word tokenization and sentence segmentation.
//!
//! Both are rule-based and deterministic so that every downstream metric is
//! reproducible across runs and machines. Text is NFC-normalized first.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::lexicon::parse_entries;

pub const DEFAULT_ABBREVIATIONS: &str = include_str!("../resources/abbreviations.txt");

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

/// Lowercase word tokens of `text`.
///
/// Splits on Unicode whitespace, strips leading and trailing punctuation and
/// symbols, and keeps everything internal (hyphens, apostrophes, digit
/// separators such as `3,632` or `0.13`). Fragments with no alphanumeric
/// character are dropped.
pub fn tokenize_words(text: &str) -> Vec<String> {
    let text: String = text.nfc().collect();
    text.split_whitespace()
        .filter_map(|chunk| {
            let word = chunk.trim_matches(|c: char| !c.is_alphanumeric());
            if word.is_empty() {
                return None;
            }
            Some(
                word.chars()
                    .map(|c| if is_apostrophe(c) { '\'' } else { c })
                    .flat_map(char::to_lowercase)
                    .collect(),
            )
        })
        .collect()
}

/// Rule-based sentence splitter with a fixed abbreviation list.
#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::from_list(DEFAULT_ABBREVIATIONS)
    }
}

impl Segmenter {
    /// Builds a segmenter from a word-list resource (one abbreviation per
    /// line, `#` comments allowed).
    pub fn from_list(src: &str) -> Self {
        Segmenter {
            abbreviations: parse_entries(src).map(|s| s.to_lowercase()).collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_list(&src))
    }

    pub fn is_abbreviation(&self, token: &str) -> bool {
        self.abbreviations.contains(&token.to_lowercase())
    }

    /// Splits `text` into trimmed, non-empty sentences.
    ///
    /// A boundary is placed after a run of `.`, `!` or `?` (optionally
    /// followed by closing quotes or brackets) when whitespace follows and
    /// the next non-space character is an uppercase letter, an opening quote
    /// or a digit. Periods that end a listed abbreviation never split.
    pub fn split(&self, text: &str) -> Vec<String> {
        let text: String = text.nfc().collect();
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut sentences = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;

        while i < chars.len() {
            let (_, c) = chars[i];
            if !matches!(c, '.' | '!' | '?') {
                i += 1;
                continue;
            }
            let term_start = i;
            let mut j = i;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?') {
                j += 1;
            }
            while j < chars.len() && is_closer(chars[j].1) {
                j += 1;
            }
            let end_byte = if j < chars.len() { chars[j].0 } else { text.len() };
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = k > j
                && k < chars.len()
                && starts_sentence(chars[k].1)
                && !(chars[term_start].1 == '.' && self.ends_abbreviation(&text, chars[term_start].0));
            if boundary {
                push_trimmed(&mut sentences, &text[start..end_byte]);
                start = chars[k].0;
                i = k;
            } else {
                i = j.max(i + 1);
            }
        }
        push_trimmed(&mut sentences, &text[start..]);
        sentences
    }

    /// Whether the whitespace-delimited token ending with the period at
    /// `period_byte` is a listed abbreviation.
    fn ends_abbreviation(&self, text: &str, period_byte: usize) -> bool {
        let head = &text[..=period_byte];
        let token_start = head
            .char_indices()
            .rev()
            .find(|(_, c)| c.is_whitespace())
            .map(|(idx, c)| idx + c.len_utf8())
            .unwrap_or(0);
        let token = head[token_start..].trim_start_matches(|c: char| is_opener(c) || c == '(');
        self.is_abbreviation(token)
    }
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201D}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201C}' | '\u{2018}')
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || is_opener(c)
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

/// Sentence split with the default abbreviation list.
pub fn split_sentences(text: &str) -> Vec<String> {
    Segmenter::default().split(text)
}

/// Raw explanation text with its derived sentences and word tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationText {
    pub raw: String,
    pub sentences: Vec<String>,
    pub words: Vec<String>,
}

impl ExplanationText {
    pub fn new(raw: &str, segmenter: &Segmenter) -> Self {
        ExplanationText {
            raw: raw.to_string(),
            sentences: segmenter.split(raw),
            words: tokenize_words(raw),
        }
    }

    pub fn sentence_count(&self) -> usize {
        self.sentences.len()
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }
}
