//! Run configuration, loaded from an optional JSON file.
//!
//! Every key is optional:
//!
//! ```json
//! {
//!   "endpoint": "http://127.0.0.1:8000",
//!   "max_inflight": 4,
//!   "shuffles": 10,
//!   "seed": 42,
//!   "single_shuffle": false,
//!   "failure_threshold": 0.1,
//!   "cache": true,
//!   "cache_dir": ".narrametric-cache",
//!   "connectives": "path/to/connectives.txt",
//!   "cause_effect": "path/to/cause_effect.txt",
//!   "verbs": "path/to/verbs.txt",
//!   "abbreviations": "path/to/abbreviations.txt",
//!   "stats": { "alpha": 0.05, "tie_correction": true,
//!              "missing_policy": "mid_rank", "posthoc_missing_policy": "next_rank" }
//! }
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexical::Lexicons;
use crate::lexicon::Lexicon;
use crate::metrics::{EvalConfig, Evaluator};
use crate::stats::StatsConfig;
use crate::tagger::RuleTagger;
use crate::text::Segmenter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub endpoint: Option<String>,
    pub max_inflight: usize,
    pub shuffles: usize,
    pub seed: u64,
    pub single_shuffle: bool,
    /// Fraction of records allowed to fail before the run fails.
    pub failure_threshold: f64,
    pub cache: bool,
    pub cache_dir: PathBuf,
    pub connectives: Option<PathBuf>,
    pub cause_effect: Option<PathBuf>,
    pub verbs: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    pub stats: StatsConfig,
}

impl Default for Config {
    fn default() -> Self {
        let eval = EvalConfig::default();
        Config {
            endpoint: None,
            max_inflight: 4,
            shuffles: eval.shuffles,
            seed: eval.seed,
            single_shuffle: eval.single_shuffle,
            failure_threshold: 0.10,
            cache: true,
            cache_dir: PathBuf::from(".narrametric-cache"),
            connectives: None,
            cause_effect: None,
            verbs: None,
            abbreviations: None,
            stats: StatsConfig::default(),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&src).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            shuffles: self.shuffles,
            seed: self.seed,
            single_shuffle: self.single_shuffle,
        }
    }

    /// Evaluator with any configured resource files swapped in.
    pub fn evaluator(&self) -> Result<Evaluator> {
        let mut lexicons = Lexicons::default();
        if let Some(p) = &self.connectives {
            lexicons.connectives = Arc::new(Lexicon::from_file(p)?);
        }
        if let Some(p) = &self.cause_effect {
            lexicons.cause_effect = Arc::new(Lexicon::from_file(p)?);
        }
        if let Some(p) = &self.verbs {
            lexicons.tagger = Arc::new(RuleTagger::from_file(p)?);
        }
        let segmenter = match &self.abbreviations {
            Some(p) => Segmenter::from_file(p)?,
            None => Segmenter::default(),
        };
        Ok(Evaluator {
            segmenter,
            lexicons,
            config: self.eval_config(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c: Config = serde_json::from_str(r#"{"seed": 7, "stats": {"alpha": 0.1}}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.shuffles, 10);
        assert_eq!(c.stats.alpha, 0.1);
        assert!(c.stats.tie_correction);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<Config>(r#"{"sede": 7}"#).is_err());
    }
}
