//! Verb detection for the verb-ratio metric.
//!
//! The default tagger is a small deterministic rule system: a verb-lemma
//! list with regular inflection rules, a closed auxiliary/modal class, and
//! two context rules (after `to` or a modal the token is a verb, after a
//! determiner it is not). Plug in anything else through [`PosTagger`].

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lexicon::parse_entries;

pub const DEFAULT_VERBS: &str = include_str!("../resources/verbs.txt");

const AUXILIARIES: &[&str] = &[
    "am", "is", "are", "was", "were", "be", "been", "being", "do", "does", "did", "done", "doing",
    "have", "has", "had", "having",
];

const MODALS: &[&str] = &[
    "will", "would", "can", "could", "shall", "should", "may", "might", "must",
];

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "its", "his", "her", "their", "our", "my",
    "your", "each", "every", "some", "any", "no", "another", "such",
];

// Closed-class words that are never verbs, whatever precedes them.
const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "its", "his", "her", "their", "our", "my",
    "your", "it", "he", "she", "they", "we", "you", "i", "him", "them", "us", "me", "and", "or",
    "but", "of", "in", "on", "at", "to", "for", "with", "from", "by", "as", "not", "very", "more",
    "most", "less", "than", "there", "here", "which", "who", "what", "when", "where", "why",
    "how", "also", "only", "just", "too", "so", "if", "all", "both", "each", "every", "some",
    "any", "no", "toward", "towards", "into", "onto", "over", "under",
];

pub trait PosTagger: Send + Sync {
    /// One flag per input token: true when the token is tagged as a verb.
    fn verb_flags(&self, words: &[String]) -> Vec<bool>;
}

#[derive(Debug, Clone)]
pub struct RuleTagger {
    lemmas: HashSet<String>,
}

impl Default for RuleTagger {
    fn default() -> Self {
        Self::from_list(DEFAULT_VERBS)
    }
}

impl RuleTagger {
    pub fn from_list(src: &str) -> Self {
        RuleTagger {
            lemmas: parse_entries(src).map(str::to_lowercase).collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_list(&src))
    }

    fn known(&self, stem: &str) -> bool {
        !stem.is_empty() && self.lemmas.contains(stem)
    }

    /// Lemma lookup including regular -s, -ed and -ing inflections.
    pub fn is_verb_form(&self, word: &str) -> bool {
        if self.known(word) {
            return true;
        }
        let candidates = |stem: &str| -> bool {
            if self.known(stem) || self.known(&format!("{stem}e")) {
                return true;
            }
            // doubled final consonant: stopped -> stop, running -> run
            let b = stem.as_bytes();
            b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] && self.known(&stem[..stem.len() - 1])
        };
        if let Some(stem) = word.strip_suffix("ies") {
            if self.known(&format!("{stem}y")) {
                return true;
            }
        }
        if let Some(stem) = word.strip_suffix("ied") {
            if self.known(&format!("{stem}y")) {
                return true;
            }
        }
        if let Some(stem) = word.strip_suffix("es") {
            if self.known(stem) {
                return true;
            }
        }
        if let Some(stem) = word.strip_suffix('s') {
            if !word.ends_with("ss") && self.known(stem) {
                return true;
            }
        }
        if let Some(stem) = word.strip_suffix("ed") {
            if candidates(stem) {
                return true;
            }
        }
        if let Some(stem) = word.strip_suffix("ing") {
            if candidates(stem) {
                return true;
            }
        }
        false
    }
}

impl PosTagger for RuleTagger {
    fn verb_flags(&self, words: &[String]) -> Vec<bool> {
        words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let w = w.as_str();
                if AUXILIARIES.contains(&w) || MODALS.contains(&w) {
                    return true;
                }
                if FUNCTION_WORDS.contains(&w) || !w.chars().any(char::is_alphabetic) {
                    return false;
                }
                let prev = if i > 0 { words[i - 1].as_str() } else { "" };
                if DETERMINERS.contains(&prev) {
                    return false;
                }
                if prev == "to" || MODALS.contains(&prev) {
                    return true;
                }
                self.is_verb_form(w)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize_words;

    fn verbs(text: &str) -> Vec<String> {
        let words = tokenize_words(text);
        let flags = RuleTagger::default().verb_flags(&words);
        words
            .into_iter()
            .zip(flags)
            .filter(|(_, f)| *f)
            .map(|(w, _)| w)
            .collect()
    }

    #[test]
    fn inflections() {
        let t = RuleTagger::default();
        for w in ["runs", "classifies", "pushes", "stopped", "running", "combined", "made", "applied"] {
            assert!(t.is_verb_form(w), "{w}");
        }
        for w in ["model", "credit", "class", "feature"] {
            assert!(!t.is_verb_form(w), "{w}");
        }
    }

    #[test]
    fn context_rules() {
        assert_eq!(verbs("she runs fast"), ["runs"]);
        assert!(verbs("the cat").is_empty());
        // determiner blocks participles used as adjectives
        assert!(verbs("the requested amount").is_empty());
        // "to" and modals license unknown verbs
        assert_eq!(verbs("we want to blorf"), ["want", "blorf"]);
        assert_eq!(verbs("it can zorp"), ["can", "zorp"]);
        assert_eq!(verbs("The model is good"), ["is"]);
    }
}
