use std::collections::HashMap;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::{LogprobProvider, ScoredText};
use crate::error::ProviderError;

/// Replays caller-supplied log-probabilities for exact texts.
///
/// Texts without a script are rejected, so a test can never silently score
/// something it did not anticipate.
#[derive(Debug, Clone, Default)]
pub struct ScriptedProvider {
    scripts: HashMap<String, ScoredText>,
}

/// On-disk script: `{"texts": [{"text": ..., "perplexity": ...}, ...]}`;
/// an entry may give `tokens` + `logprobs` instead of `perplexity`.
#[derive(Debug, Deserialize)]
pub struct ScriptFile {
    pub texts: Vec<ScriptEntry>,
}

#[derive(Debug, Deserialize)]
pub struct ScriptEntry {
    pub text: String,
    #[serde(default)]
    pub perplexity: Option<f64>,
    #[serde(default)]
    pub tokens: Option<Vec<String>>,
    #[serde(default)]
    pub logprobs: Option<Vec<Option<f64>>>,
}

impl ScriptedProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, text: impl Into<String>, scored: ScoredText) {
        self.scripts.insert(text.into(), scored);
    }

    /// Pairs `logprobs` with the whitespace-separated tokens of `text`.
    pub fn with_logprobs(
        mut self,
        text: &str,
        logprobs: Vec<Option<f64>>,
    ) -> Result<Self, ProviderError> {
        let tokens = text.split_whitespace().map(str::to_string).collect();
        self.insert(text, ScoredText::new(tokens, logprobs)?);
        Ok(self)
    }

    /// Scripts `text` so that its perplexity is exactly `ppl`: the first
    /// whitespace token is absent and every other token gets `-ln(ppl)`.
    /// A one-token text keeps its single logprob.
    pub fn with_perplexity(mut self, text: &str, ppl: f64) -> Self {
        assert!(ppl >= 1.0, "perplexity below 1 is not a probability");
        let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
        let lp = -ppl.ln();
        let logprobs = (0..tokens.len())
            .map(|i| if i == 0 && tokens.len() > 1 { None } else { Some(lp) })
            .collect();
        self.scripts.insert(text.to_string(), ScoredText { tokens, logprobs });
        self
    }

    pub fn from_script(file: ScriptFile) -> Result<Self, ProviderError> {
        let mut p = ScriptedProvider::new();
        for entry in file.texts {
            p = match (entry.perplexity, entry.tokens, entry.logprobs) {
                (Some(ppl), None, None) if ppl >= 1.0 => p.with_perplexity(&entry.text, ppl),
                (None, Some(tokens), Some(lps)) => {
                    p.insert(entry.text, ScoredText::new(tokens, lps)?);
                    p
                }
                (None, None, Some(lps)) => p.with_logprobs(&entry.text, lps)?,
                _ => {
                    return Err(ProviderError::Malformed(format!(
                        "script entry for {:?} needs a perplexity >= 1 or logprobs",
                        entry.text
                    )))
                }
            };
        }
        Ok(p)
    }

    pub fn len(&self) -> usize {
        self.scripts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scripts.is_empty()
    }
}

impl LogprobProvider for ScriptedProvider {
    fn identity(&self) -> String {
        let mut keys: Vec<&String> = self.scripts.keys().collect();
        keys.sort();
        let mut h = Sha256::new();
        for k in keys {
            h.update(k.as_bytes());
            h.update([0]);
            h.update(serde_json::to_vec(&self.scripts[k]).unwrap_or_default());
        }
        format!("scripted:{}", &hex::encode(h.finalize())[..16])
    }

    fn score(&self, text: &str) -> Result<ScoredText, ProviderError> {
        self.scripts.get(text).cloned().ok_or_else(|| ProviderError::Rejected {
            status: 404,
            message: format!("no script for text {:?}", truncate(text, 60)),
            attempts: 1,
        })
    }
}

fn truncate(s: &str, n: usize) -> String {
    match s.char_indices().nth(n) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::perplexity;

    #[test]
    fn replays_logprobs() {
        let lp = (1.0f64 / 8.0).ln();
        let p = ScriptedProvider::new().with_logprobs("a b c d", vec![Some(lp); 4]).unwrap();
        let s = p.score("a b c d").unwrap();
        assert_eq!(s.len(), 4);
        assert!((perplexity(&s).unwrap() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn scripted_perplexity_round_trips() {
        let p = ScriptedProvider::new().with_perplexity("one two three", 15.10);
        assert!((perplexity(&p.score("one two three").unwrap()).unwrap() - 15.10).abs() < 1e-12);
        let single = ScriptedProvider::new().with_perplexity("solo", 4.0);
        assert!((perplexity(&single.score("solo").unwrap()).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_text_is_rejected() {
        assert!(matches!(
            ScriptedProvider::new().score("anything"),
            Err(ProviderError::Rejected { status: 404, .. })
        ));
    }

    #[test]
    fn identity_tracks_content() {
        let a = ScriptedProvider::new().with_perplexity("x y", 2.0);
        let b = ScriptedProvider::new().with_perplexity("x y", 3.0);
        assert_ne!(a.identity(), b.identity());
        assert_eq!(a.identity(), a.clone().identity());
    }

    #[test]
    fn script_file() {
        let file: ScriptFile = serde_json::from_str(
            r#"{"texts": [{"text": "a b", "perplexity": 2.0},
                          {"text": "c d", "logprobs": [null, -1.0]}]}"#,
        )
        .unwrap();
        let p = ScriptedProvider::from_script(file).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.score("c d").unwrap().logprobs, vec![None, Some(-1.0)]);
    }
}
