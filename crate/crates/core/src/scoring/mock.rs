use std::collections::HashSet;

use super::{LogprobProvider, ScoredText};
use crate::error::ProviderError;
use crate::text::tokenize_words;

/// Offline provider whose probabilities depend only on bigram repetition.
///
/// Tokens are the word tokens of the text. The first token and every token
/// whose bigram `(previous, current)` has not occurred earlier in the text
/// get `ln(unseen)`; a repeated bigram gets `ln(seen)`.
#[derive(Debug, Clone, Copy)]
pub struct BigramCacheProvider {
    pub seen: f64,
    pub unseen: f64,
}

impl Default for BigramCacheProvider {
    fn default() -> Self {
        BigramCacheProvider {
            seen: 0.5,
            unseen: 0.001,
        }
    }
}

impl LogprobProvider for BigramCacheProvider {
    fn identity(&self) -> String {
        format!("bigram-cache:{}:{}", self.seen, self.unseen)
    }

    fn score(&self, text: &str) -> Result<ScoredText, ProviderError> {
        let tokens = tokenize_words(text);
        let mut history: HashSet<(&str, &str)> = HashSet::new();
        let mut logprobs = Vec::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if i == 0 {
                logprobs.push(Some(self.unseen.ln()));
                continue;
            }
            let bigram = (tokens[i - 1].as_str(), tok.as_str());
            let p = if history.contains(&bigram) { self.seen } else { self.unseen };
            logprobs.push(Some(p.ln()));
            history.insert(bigram);
        }
        ScoredText::new(tokens, logprobs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{cumulative_trajectory, text_perplexity};

    #[test]
    fn repeated_bigram_gets_high_probability() {
        let s = BigramCacheProvider::default().score("x y x y").unwrap();
        let u = 0.001f64.ln();
        assert_eq!(s.logprobs, vec![Some(u), Some(u), Some(u), Some(0.5f64.ln())]);
    }

    #[test]
    fn deterministic() {
        let p = BigramCacheProvider::default();
        assert_eq!(p.score("a b c a b").unwrap(), p.score("a b c a b").unwrap());
    }

    #[test]
    fn repeated_sentence_trajectory_strictly_decreases() {
        // prefix 1: three unseen tokens. The boundary bigram (gamma, alpha)
        // is unseen once, then every later token repeats a known bigram.
        let sentences: Vec<String> = (0..5).map(|_| "Alpha beta gamma.".to_string()).collect();
        let t = cumulative_trajectory(&BigramCacheProvider::default(), &sentences).unwrap();
        let (u, s) = (0.001f64.ln(), 0.5f64.ln());
        for (x, v) in t.values.iter().enumerate() {
            let unseen = if x == 0 { 3.0 } else { 4.0 };
            let seen = 3.0 * (x as f64 + 1.0) - unseen;
            let expected = (-(unseen * u + seen * s) / (3.0 * (x as f64 + 1.0))).exp();
            assert!((v - expected).abs() < 1e-9 * expected, "x={x}: {v} vs {expected}");
        }
        assert!(t.values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn more_repetitions_never_raise_perplexity() {
        let p = BigramCacheProvider::default();
        let mut last = f64::INFINITY;
        for k in 1..8 {
            let text = vec!["Red fox jumps."; k].join(" ");
            let ppl = text_perplexity(&p, &text).unwrap();
            assert!(ppl <= last);
            last = ppl;
        }
    }
}
