//! Surface-statistics metrics over word tokens.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{match_lexicon, Lexicon};
use crate::tagger::{PosTagger, RuleTagger};

/// Distinct n-grams over n-gram positions; `None` when there are fewer than
/// `n` tokens (too short to measure diversity).
pub fn distinct_n(words: &[String], n: usize) -> Option<f64> {
    assert!(n >= 1, "n-gram order must be positive");
    if words.len() < n {
        return None;
    }
    let grams: Vec<&[String]> = words.windows(n).collect();
    let distinct: HashSet<&[String]> = grams.iter().copied().collect();
    Some(distinct.len() as f64 / grams.len() as f64)
}

pub fn type_token_ratio(words: &[String]) -> Result<f64> {
    if words.is_empty() {
        return Err(Error::EmptyText);
    }
    let types: HashSet<&String> = words.iter().collect();
    Ok(types.len() as f64 / words.len() as f64)
}

fn lexicon_ratio(words: &[String], lexicon: &Lexicon) -> Result<f64> {
    if words.is_empty() {
        return Err(Error::EmptyText);
    }
    Ok(match_lexicon(words, lexicon).count as f64 / words.len() as f64)
}

/// Lexicons and tagger shared by every text in a run. Immutable once built.
#[derive(Clone)]
pub struct Lexicons {
    pub connectives: Arc<Lexicon>,
    pub cause_effect: Arc<Lexicon>,
    pub tagger: Arc<dyn PosTagger>,
}

impl Default for Lexicons {
    fn default() -> Self {
        Lexicons {
            connectives: Arc::new(Lexicon::connectives()),
            cause_effect: Arc::new(Lexicon::cause_effect()),
            tagger: Arc::new(RuleTagger::default()),
        }
    }
}

impl std::fmt::Debug for Lexicons {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Lexicons")
            .field("connectives", &self.connectives.len())
            .field("cause_effect", &self.cause_effect.len())
            .finish_non_exhaustive()
    }
}

impl Lexicons {
    /// CR: connective matches over total words.
    pub fn connective_ratio(&self, words: &[String]) -> Result<f64> {
        lexicon_ratio(words, &self.connectives)
    }

    /// CER: cause-effect marker matches over total words.
    pub fn cause_effect_ratio(&self, words: &[String]) -> Result<f64> {
        lexicon_ratio(words, &self.cause_effect)
    }

    pub fn verb_ratio(&self, words: &[String]) -> Result<f64> {
        if words.is_empty() {
            return Err(Error::EmptyText);
        }
        let verbs = self.tagger.verb_flags(words).into_iter().filter(|&v| v).count();
        Ok(verbs as f64 / words.len() as f64)
    }

    pub fn surface_stats(&self, words: &[String]) -> Result<SurfaceStats> {
        let cr = self.connective_ratio(words)?;
        Ok(SurfaceStats {
            dist2: distinct_n(words, 2),
            ttr: type_token_ratio(words)?,
            vr: self.verb_ratio(words)?,
            cr,
            cer: self.cause_effect_ratio(words)?,
            cd: cr,
        })
    }
}

/// Surface ratios for one text. `cd` is the connective density reported in
/// summary tables; it is the same quantity as `cr`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceStats {
    pub dist2: Option<f64>,
    pub ttr: f64,
    pub vr: f64,
    pub cr: f64,
    pub cer: f64,
    pub cd: f64,
}
