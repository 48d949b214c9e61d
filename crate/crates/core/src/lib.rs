//! Narrativity metrics for natural-language explanations of model predictions.
//!
//! The crate computes five standard surface/fluency baselines (perplexity,
//! distinct bigrams, type-token ratio, verb ratio, connective density) and
//! seven composite narrativity metrics built on cumulative-perplexity decay,
//! then compares explanation methods across datasets with Friedman and
//! Nemenyi rank statistics.
//!
//! Language-model access goes through [`scoring::LogprobProvider`]; the
//! crate ships an HTTP client for the scoring sidecar plus two offline
//! providers (scripted replay and a bigram-cache mock) used by tests.

pub mod benchmark;
pub mod config;
pub mod corpus;
pub mod error;
pub mod fit;
pub mod lexical;
pub mod lexicon;
pub mod metrics;
pub mod perturb;
pub mod report;
pub mod scoring;
pub mod stats;
pub mod tagger;
pub mod text;

pub use error::{Error, ProviderError, Result};
pub use fit::{fit_decay, DecayFit};
pub use metrics::{evaluate_text, Measure, MetricId, MetricVector, Undefined};
pub use text::{split_sentences, tokenize_words, ExplanationText, Segmenter};
