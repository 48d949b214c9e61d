//! Token log-probabilities, perplexity and cumulative-perplexity trajectories.
//!
//! Every provider returns natural-log probabilities. A `None` entry marks a
//! token without a defined probability (usually the first token of a causal
//! LM); such entries are excluded from both numerator and denominator of the
//! cross-entropy.

mod cache;
mod http;
mod mock;
mod scripted;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cache::CachedProvider;
pub use http::{HttpProvider, ENDPOINT_ENV, API_KEY_ENV, SCORE_PATH};
pub use mock::BigramCacheProvider;
pub use scripted::{ScriptEntry, ScriptFile, ScriptedProvider};

use crate::error::{Error, ProviderError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredText {
    pub tokens: Vec<String>,
    pub logprobs: Vec<Option<f64>>,
}

impl ScoredText {
    /// Validates alignment and the `logprob <= 0` invariant.
    pub fn new(tokens: Vec<String>, logprobs: Vec<Option<f64>>) -> Result<Self, ProviderError> {
        if tokens.len() != logprobs.len() {
            return Err(ProviderError::Malformed(format!(
                "{} tokens but {} logprobs",
                tokens.len(),
                logprobs.len()
            )));
        }
        if let Some(bad) = logprobs.iter().flatten().find(|lp| lp.is_nan() || **lp > 0.0) {
            return Err(ProviderError::Malformed(format!("logprob {bad} is not <= 0")));
        }
        Ok(ScoredText { tokens, logprobs })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.logprobs.iter().flatten().copied()
    }

    /// Mean negative log-likelihood (nats) over present entries.
    pub fn cross_entropy(&self) -> Result<f64, ProviderError> {
        let (sum, n) = self.present().fold((0.0, 0usize), |(s, n), lp| (s + lp, n + 1));
        if n == 0 {
            return Err(ProviderError::Unscorable(
                "no token has a defined log-probability".into(),
            ));
        }
        Ok(-sum / n as f64)
    }
}

/// `exp(H)` over the present log-probabilities.
pub fn perplexity(scored: &ScoredText) -> Result<f64, ProviderError> {
    scored.cross_entropy().map(f64::exp)
}

/// Source of per-token natural-log probabilities.
///
/// Implementations must be deterministic for a fixed configuration and
/// tolerate concurrent calls.
pub trait LogprobProvider: Send + Sync {
    /// Stable identity used in cache keys (model, endpoint, script hash).
    fn identity(&self) -> String;

    fn score(&self, text: &str) -> Result<ScoredText, ProviderError>;
}

impl<P: LogprobProvider + ?Sized> LogprobProvider for &P {
    fn identity(&self) -> String {
        (**self).identity()
    }
    fn score(&self, text: &str) -> Result<ScoredText, ProviderError> {
        (**self).score(text)
    }
}

impl<P: LogprobProvider + ?Sized> LogprobProvider for Arc<P> {
    fn identity(&self) -> String {
        (**self).identity()
    }
    fn score(&self, text: &str) -> Result<ScoredText, ProviderError> {
        (**self).score(text)
    }
}

impl<P: LogprobProvider + ?Sized> LogprobProvider for Box<P> {
    fn identity(&self) -> String {
        (**self).identity()
    }
    fn score(&self, text: &str) -> Result<ScoredText, ProviderError> {
        (**self).score(text)
    }
}

pub fn score(provider: &dyn LogprobProvider, text: &str) -> Result<ScoredText, ProviderError> {
    provider.score(text)
}

/// Perplexity of `text` under `provider`.
pub fn text_perplexity(provider: &dyn LogprobProvider, text: &str) -> Result<f64, ProviderError> {
    perplexity(&provider.score(text)?)
}

/// `values[x - 1]` is the perplexity of the first `x` sentences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityTrajectory {
    pub values: Vec<f64>,
}

impl PerplexityTrajectory {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Prefix `S[1:x]` of the sentence list, joined with single spaces.
pub fn prefix_text(sentences: &[String], x: usize) -> String {
    sentences[..x].join(" ")
}

/// Rescores every sentence prefix. Provider errors carry the 1-based
/// prefix length that failed.
pub fn cumulative_trajectory(
    provider: &dyn LogprobProvider,
    sentences: &[String],
) -> Result<PerplexityTrajectory> {
    if sentences.is_empty() {
        return Err(Error::EmptyText);
    }
    let values = (1..=sentences.len())
        .map(|x| {
            text_perplexity(provider, &prefix_text(sentences, x))
                .map_err(|source| Error::Prefix { prefix: x, source })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerplexityTrajectory { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scored(lps: &[Option<f64>]) -> ScoredText {
        let tokens = (0..lps.len()).map(|i| format!("t{i}")).collect();
        ScoredText::new(tokens, lps.to_vec()).unwrap()
    }

    #[test]
    fn uniform_eighth_is_eight() {
        let ppl = perplexity(&scored(&[Some((1.0f64 / 8.0).ln()); 4])).unwrap();
        assert!((ppl - 8.0).abs() < 1e-12);
    }

    #[test]
    fn certain_token_is_one() {
        assert_eq!(perplexity(&scored(&[Some(0.0)])).unwrap(), 1.0);
    }

    #[test]
    fn half_and_quarter() {
        // exp(-(ln .5 + ln .25) / 2) = sqrt(8)
        let ppl = perplexity(&scored(&[None, Some(0.5f64.ln()), Some(0.25f64.ln())])).unwrap();
        assert!((ppl - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn no_present_logprob_is_unscorable() {
        assert!(matches!(
            perplexity(&scored(&[None, None])),
            Err(ProviderError::Unscorable(_))
        ));
    }

    #[test]
    fn rejects_misaligned_or_positive() {
        assert!(ScoredText::new(vec!["a".into()], vec![]).is_err());
        assert!(ScoredText::new(vec!["a".into()], vec![Some(0.1)]).is_err());
        assert!(ScoredText::new(vec!["a".into()], vec![Some(f64::NAN)]).is_err());
    }

    #[test]
    fn single_sentence_trajectory() {
        let p = BigramCacheProvider::default();
        let s = vec!["Alpha beta gamma.".to_string()];
        let t = cumulative_trajectory(&p, &s).unwrap();
        assert_eq!(t.values.len(), 1);
        assert_eq!(t.values[0], text_perplexity(&p, &s[0]).unwrap());
    }

    #[test]
    fn trajectory_error_names_prefix() {
        let p = ScriptedProvider::new().with_perplexity("A b.", 3.0);
        let s = vec!["A b.".to_string(), "C d.".to_string()];
        match cumulative_trajectory(&p, &s) {
            Err(Error::Prefix { prefix, .. }) => assert_eq!(prefix, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    proptest! {
        #[test]
        fn absent_entries_do_not_move_perplexity(
            lps in proptest::collection::vec(-10.0f64..0.0, 1..20),
            extra in 0usize..5,
        ) {
            let base: Vec<Option<f64>> = lps.iter().copied().map(Some).collect();
            let mut padded = base.clone();
            padded.extend(std::iter::repeat_n(None, extra));
            let a = perplexity(&scored(&base)).unwrap();
            let b = perplexity(&scored(&padded)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
    }
}
