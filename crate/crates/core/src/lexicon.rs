//! Phrase lexicons and greedy longest-match counting over word tokens.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize_words;

pub const DEFAULT_CONNECTIVES: &str = include_str!("../resources/connectives.txt");
pub const DEFAULT_CAUSE_EFFECT: &str = include_str!("../resources/cause_effect.txt");

/// Non-empty, non-comment lines of a word-list resource, trimmed.
pub fn parse_entries(src: &str) -> impl Iterator<Item = &str> {
    src.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
}

/// An immutable set of lowercase word sequences.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    phrases: Vec<Vec<String>>,
    // first word -> phrase indices, longest phrase first
    index: HashMap<String, Vec<usize>>,
}

impl Lexicon {
    /// Parses one phrase per line; phrases go through the word tokenizer so
    /// they compare equal to tokens produced from running text.
    pub fn parse(src: &str) -> Self {
        let mut phrases: Vec<Vec<String>> = Vec::new();
        for line in parse_entries(src) {
            let words = tokenize_words(line);
            if !words.is_empty() && !phrases.contains(&words) {
                phrases.push(words);
            }
        }
        let mut index: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, p) in phrases.iter().enumerate() {
            index.entry(p[0].clone()).or_default().push(i);
        }
        for ids in index.values_mut() {
            ids.sort_by_key(|&i| std::cmp::Reverse(phrases[i].len()));
        }
        Lexicon { phrases, index }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&src))
    }

    pub fn connectives() -> Self {
        Self::parse(DEFAULT_CONNECTIVES)
    }

    pub fn cause_effect() -> Self {
        Self::parse(DEFAULT_CAUSE_EFFECT)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn phrases(&self) -> impl Iterator<Item = String> + '_ {
        self.phrases.iter().map(|p| p.join(" "))
    }

    fn longest_at(&self, words: &[String], at: usize) -> Option<&[String]> {
        let ids = self.index.get(&words[at])?;
        ids.iter()
            .map(|&i| self.phrases[i].as_slice())
            .find(|p| words[at..].starts_with(p))
    }

    /// Greedy left-to-right, longest-first, non-overlapping matching.
    pub fn find(&self, words: &[String]) -> LexiconMatchResult {
        let mut matches = Vec::new();
        let mut i = 0;
        while i < words.len() {
            match self.longest_at(words, i) {
                Some(p) => {
                    matches.push(LexiconMatch {
                        start: i,
                        phrase: p.join(" "),
                    });
                    i += p.len();
                }
                None => i += 1,
            }
        }
        LexiconMatchResult {
            count: matches.len(),
            matches,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconMatch {
    /// Index of the first matched word token.
    pub start: usize,
    pub phrase: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconMatchResult {
    pub count: usize,
    pub matches: Vec<LexiconMatch>,
}

pub fn match_lexicon(words: &[String], lexicon: &Lexicon) -> LexiconMatchResult {
    lexicon.find(words)
}
