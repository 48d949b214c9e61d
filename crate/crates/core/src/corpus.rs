//! JSON-Lines corpus of generated explanations.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One explanation: the experimental unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusRecord {
    pub dataset: String,
    pub method: String,
    pub instance_id: String,
    pub text: String,
}

impl CorpusRecord {
    pub fn key(&self) -> (&str, &str, &str) {
        (&self.dataset, &self.method, &self.instance_id)
    }
}

/// Parses JSON-Lines records. Blank lines are skipped; `label` names the
/// source in errors.
pub fn parse_corpus<R: Read>(reader: R, label: &Path) -> Result<Vec<CorpusRecord>> {
    let err = |line: usize, message: String| Error::Corpus {
        path: label.to_path_buf(),
        line,
        message,
    };
    let mut records: Vec<CorpusRecord> = Vec::new();
    let mut seen: HashSet<(String, String, String)> = HashSet::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| err(n, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(&line).map_err(|e| err(n, e.to_string()))?;
        if rec.text.trim().is_empty() {
            return Err(err(n, "empty text".into()));
        }
        let key = (rec.dataset.clone(), rec.method.clone(), rec.instance_id.clone());
        if !seen.insert(key) {
            return Err(err(
                n,
                format!(
                    "duplicate key (dataset={}, method={}, instance_id={})",
                    rec.dataset, rec.method, rec.instance_id
                ),
            ));
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(file, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<CorpusRecord>> {
        parse_corpus(s.as_bytes(), Path::new("mem.jsonl"))
    }

    #[test]
    fn two_valid_lines() {
        let src = r#"{"dataset":"d","method":"m","instance_id":"1","text":"A."}

{"dataset":"d","method":"m","instance_id":"2","text":"B."}
"#;
        assert_eq!(parse(src).unwrap().len(), 2);
    }

    #[test]
    fn missing_text_reports_line() {
        let src = "{\"dataset\":\"d\",\"method\":\"m\",\"instance_id\":\"1\",\"text\":\"A.\"}\n{\"dataset\":\"d\",\"method\":\"m\",\"instance_id\":\"2\"}\n";
        match parse(src).unwrap_err() {
            Error::Corpus { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("text"), "{message}");
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_named() {
        let line = r#"{"dataset":"d","method":"m","instance_id":"7","text":"A."}"#;
        let err = parse(&format!("{line}\n{line}\n")).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("instance_id=7"), "{err}");
    }

    #[test]
    fn empty_text_rejected() {
        let err = parse(r#"{"dataset":"d","method":"m","instance_id":"1","text":"  "}"#).unwrap_err();
        assert!(err.to_string().contains("empty text"));
    }
}
