use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Backend, BackendError, BackendReply, ChatRequest, Completion};
use crate::io::write_json_atomic;
use crate::prompt::TemplateName;

/// Stored form of one completion, `<digest>.json` in a cache directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub digest: String,
    pub model_id: String,
    pub template_name: TemplateName,
    pub template_digest: String,
    pub completion: Completion,
}

/// Content-addressed completion store.
#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Cache> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Cache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    /// Unreadable or corrupt entries count as misses.
    pub fn get(&self, digest: &str) -> Option<CacheEntry> {
        read_entry(&self.path_for(digest)).filter(|e| e.digest == digest)
    }

    pub fn put(&self, entry: &CacheEntry) -> std::io::Result<()> {
        write_json_atomic(&self.path_for(&entry.digest), entry)
    }
}

fn read_entry(path: &Path) -> Option<CacheEntry> {
    let text = fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

/// Serves completions from a directory in the cache format; never touches
/// the network.
#[derive(Debug, Clone)]
pub struct ReplayBackend {
    dir: PathBuf,
}

impl ReplayBackend {
    pub fn new(dir: impl Into<PathBuf>) -> ReplayBackend {
        ReplayBackend { dir: dir.into() }
    }
}

impl Backend for ReplayBackend {
    fn send(&self, request: &ChatRequest) -> Result<BackendReply, BackendError> {
        let path = self.dir.join(format!("{}.json", request.digest));
        let entry =
            read_entry(&path).ok_or_else(|| BackendError::ReplayMiss(request.digest.clone()))?;
        let c = entry.completion;
        Ok(BackendReply {
            text: c.text,
            finish_reason: c.finish_reason,
            token_usage: c.token_usage,
            latency_ms: Some(c.latency_ms),
        })
    }
}
