use std::collections::HashMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use log::warn;
use sha2::{Digest, Sha256};

use super::{LogprobProvider, ScoredText};
use crate::error::ProviderError;

/// Memoizes `score` by `(provider identity, exact text bytes)`.
///
/// Results live in memory and, when a directory is configured, as one JSON
/// file per key. Disk failures are logged and fall back to the provider.
pub struct CachedProvider<P> {
    inner: P,
    dir: Option<PathBuf>,
    enabled: bool,
    memory: Mutex<HashMap<String, ScoredText>>,
}

impl<P: LogprobProvider> CachedProvider<P> {
    pub fn new(inner: P) -> Self {
        CachedProvider {
            inner,
            dir: None,
            enabled: true,
            memory: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.dir = Some(dir.into());
        self
    }

    pub fn enabled(mut self, enabled: bool) -> Self {
        self.enabled = enabled;
        self
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn key(&self, text: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.inner.identity().as_bytes());
        h.update([0]);
        h.update(text.as_bytes());
        hex::encode(h.finalize())
    }

    fn path_for(dir: &Path, key: &str) -> PathBuf {
        dir.join(&key[..2]).join(format!("{key}.json"))
    }

    fn read_disk(&self, key: &str) -> Option<ScoredText> {
        let path = Self::path_for(self.dir.as_ref()?, key);
        match fs::read(&path) {
            Ok(bytes) => match serde_json::from_slice(&bytes) {
                Ok(scored) => Some(scored),
                Err(e) => {
                    warn!("ignoring unreadable cache entry {}: {e}", path.display());
                    None
                }
            },
            Err(e) if e.kind() == ErrorKind::NotFound => None,
            Err(e) => {
                warn!("cache read failed for {}: {e}", path.display());
                None
            }
        }
    }

    fn write_disk(&self, key: &str, scored: &ScoredText) {
        let Some(dir) = &self.dir else { return };
        let path = Self::path_for(dir, key);
        let result = (|| -> std::io::Result<()> {
            fs::create_dir_all(path.parent().expect("cache path has a parent"))?;
            let tmp = path.with_extension(format!("tmp{}", std::process::id()));
            fs::write(&tmp, serde_json::to_vec(scored)?)?;
            fs::rename(&tmp, &path)
        })();
        if let Err(e) = result {
            warn!("cache write failed for {}: {e}", path.display());
        }
    }
}

impl<P: LogprobProvider> LogprobProvider for CachedProvider<P> {
    fn identity(&self) -> String {
        self.inner.identity()
    }

    fn score(&self, text: &str) -> Result<ScoredText, ProviderError> {
        if !self.enabled {
            return self.inner.score(text);
        }
        let key = self.key(text);
        if let Some(hit) = self.memory.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        if let Some(hit) = self.read_disk(&key) {
            self.memory.lock().unwrap().insert(key, hit.clone());
            return Ok(hit);
        }
        let scored = self.inner.score(text)?;
        self.write_disk(&key, &scored);
        self.memory.lock().unwrap().insert(key, scored.clone());
        Ok(scored)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::BigramCacheProvider;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[derive(Default)]
    struct Counting {
        calls: AtomicUsize,
    }

    impl LogprobProvider for Counting {
        fn identity(&self) -> String {
            "counting".into()
        }
        fn score(&self, text: &str) -> Result<ScoredText, ProviderError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            BigramCacheProvider::default().score(text)
        }
    }

    #[test]
    fn second_call_hits_memory() {
        let c = CachedProvider::new(Counting::default());
        let a = c.score("a b a b").unwrap();
        let b = c.score("a b a b").unwrap();
        assert_eq!(a, b);
        assert_eq!(c.inner().calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn whitespace_changes_key() {
        let c = CachedProvider::new(Counting::default());
        assert_ne!(c.key("a b"), c.key("a  b"));
        c.score("a b").unwrap();
        c.score("a  b").unwrap();
        assert_eq!(c.inner().calls.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn disabled_cache_always_calls() {
        let c = CachedProvider::new(Counting::default()).enabled(false);
        for _ in 0..3 {
            c.score("x").unwrap();
        }
        assert_eq!(c.inner().calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn disk_cache_survives_new_instance() {
        let dir = tempfile::tempdir().unwrap();
        let first = CachedProvider::new(Counting::default()).with_dir(dir.path());
        let scored = first.score("persist me").unwrap();
        let second = CachedProvider::new(Counting::default()).with_dir(dir.path());
        assert_eq!(second.score("persist me").unwrap(), scored);
        assert_eq!(second.inner().calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn unwritable_dir_degrades_to_uncached() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, b"not a directory").unwrap();
        let c = CachedProvider::new(Counting::default()).with_dir(&blocker);
        assert!(c.score("still works").is_ok());
    }

    #[test]
    fn corrupt_entry_is_rescored() {
        let dir = tempfile::tempdir().unwrap();
        let c = CachedProvider::new(Counting::default()).with_dir(dir.path());
        let key = c.key("text");
        let path = CachedProvider::<Counting>::path_for(dir.path(), &key);
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, b"{broken").unwrap();
        assert!(c.score("text").is_ok());
        assert_eq!(c.inner().calls.load(Ordering::SeqCst), 1);
    }
}
