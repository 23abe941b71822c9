use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::CefrBand;

use super::GraderError;

/// One cached backend exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub prompt: String,
    pub raw_response: String,
    pub parsed_level: CefrBand,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// Directory of `<sha256(model, prompt)>.json` files.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<ResponseCache, GraderError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| GraderError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(ResponseCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(model: &str, prompt: &str) -> String {
        let mut h = Sha256::new();
        h.update(model.as_bytes());
        h.update([0]);
        h.update(prompt.as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, model: &str, prompt: &str) -> PathBuf {
        self.dir.join(format!("{}.json", ResponseCache::key(model, prompt)))
    }

    /// The stored entry for this exact prompt, if any. Unreadable files count
    /// as misses.
    pub fn get(&self, model: &str, prompt: &str) -> Option<CacheEntry> {
        let path = self.path(model, prompt);
        let content = fs::read_to_string(&path).ok()?;
        match serde_json::from_str::<CacheEntry>(&content) {
            Ok(entry) if entry.prompt == prompt => Some(entry),
            Ok(_) => None,
            Err(e) => {
                log::warn!("ignoring unreadable cache file {}: {e}", path.display());
                None
            }
        }
    }

    /// Writes to a temporary file in the cache directory, then renames.
    pub fn put(&self, model: &str, prompt: &str, raw_response: &str, level: CefrBand) -> Result<(), GraderError> {
        let entry = CacheEntry {
            prompt: prompt.to_string(),
            raw_response: raw_response.to_string(),
            parsed_level: level,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let err = |e: String| GraderError::Cache(e);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| err(e.to_string()))?;
        serde_json::to_writer_pretty(&mut tmp, &entry).map_err(|e| err(e.to_string()))?;
        tmp.write_all(b"\n").map_err(|e| err(e.to_string()))?;
        tmp.persist(self.path(model, prompt)).map_err(|e| err(e.to_string()))?;
        Ok(())
    }
}
