use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{complete, CompletionClient, CompletionRequest, CompletionResponse, GatewayError};

/// Responses on disk, one JSON file per request fingerprint.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Fingerprint<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: u32,
    temperature: f64,
    top_p: f64,
}

impl<'a> From<&'a CompletionRequest> for Fingerprint<'a> {
    fn from(r: &'a CompletionRequest) -> Self {
        Fingerprint {
            model: &r.model,
            prompt: &r.prompt,
            max_tokens: r.max_tokens,
            temperature: r.temperature,
            top_p: r.top_p,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Entry {
    key: String,
    request: CompletionRequest,
    provider: String,
    text: String,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| GatewayError::CacheIo {
            key: dir.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(ResponseCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Hex SHA-256 of the request fingerprint.
    pub fn key(req: &CompletionRequest) -> String {
        let canonical = serde_json::to_vec(&Fingerprint::from(req)).expect("fingerprint serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, req: &CompletionRequest) -> Result<Option<CompletionResponse>, GatewayError> {
        let key = Self::key(req);
        let path = self.path_for(&key);
        let raw = match fs::read(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(GatewayError::CacheIo { key, message: e.to_string() }),
        };
        let entry: Entry = serde_json::from_slice(&raw)
            .map_err(|e| GatewayError::CacheIo { key: key.clone(), message: format!("corrupted entry: {e}") })?;
        if entry.key != key || &entry.request != req {
            return Err(GatewayError::CacheIo { key, message: "stored request fingerprint does not match".into() });
        }
        Ok(Some(CompletionResponse {
            text: entry.text,
            provider: entry.provider,
            latency: Duration::ZERO,
            from_cache: true,
        }))
    }

    /// Write-then-rename, so readers never observe a partial entry.
    pub fn put(&self, req: &CompletionRequest, resp: &CompletionResponse) -> Result<(), GatewayError> {
        let key = Self::key(req);
        let io = |e: std::io::Error| GatewayError::CacheIo { key: key.clone(), message: e.to_string() };
        let entry = Entry {
            key: key.clone(),
            request: req.clone(),
            provider: resp.provider.clone(),
            text: resp.text.clone(),
        };
        let body = serde_json::to_vec_pretty(&entry).expect("entry serializes");
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(&body).map_err(io)?;
        tmp.persist(self.path_for(&key)).map_err(|e| io(e.error))?;
        Ok(())
    }
}

/// Cache lookup first; on a miss, one provider completion that is then stored.
pub fn cached_complete(
    cache: Option<&ResponseCache>,
    client: &dyn CompletionClient,
    req: &CompletionRequest,
) -> Result<CompletionResponse, GatewayError> {
    let Some(cache) = cache else {
        return complete(client, req);
    };
    req.validate()?;
    let started = Instant::now();
    if let Some(mut hit) = cache.get(req)? {
        hit.latency = started.elapsed();
        return Ok(hit);
    }
    let resp = complete(client, req)?;
    cache.put(req, &resp)?;
    Ok(resp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ScriptedMock;

    #[test]
    fn second_call_hits_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let client = ScriptedMock::new(vec!["first".into(), "second".into()]);
        let req = CompletionRequest::new("m", "prompt");
        let a = cached_complete(Some(&cache), &client, &req).unwrap();
        let b = cached_complete(Some(&cache), &client, &req).unwrap();
        assert_eq!((a.text.as_str(), a.from_cache), ("first", false));
        assert_eq!((b.text.as_str(), b.from_cache), ("first", true));
        assert_eq!(client.call_count(), 1);
    }

    #[test]
    fn temperature_changes_key() {
        let a = CompletionRequest::new("m", "prompt");
        let mut b = a.clone();
        b.temperature = 0.5;
        assert_ne!(ResponseCache::key(&a), ResponseCache::key(&b));
        let mut c = a.clone();
        c.model = "other".into();
        assert_ne!(ResponseCache::key(&a), ResponseCache::key(&c));
        assert_eq!(ResponseCache::key(&a), ResponseCache::key(&a.clone()));
        assert_eq!(ResponseCache::key(&a).len(), 64);
    }

    #[test]
    fn corrupted_entry_reports_key() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let req = CompletionRequest::new("m", "prompt");
        let key = ResponseCache::key(&req);
        fs::write(cache.path_for(&key), b"{ not json").unwrap();
        match cache.get(&req) {
            Err(GatewayError::CacheIo { key: k, .. }) => assert_eq!(k, key),
            other => panic!("expected CacheIo, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_fingerprint_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path()).unwrap();
        let req = CompletionRequest::new("m", "prompt");
        let other = CompletionRequest::new("m", "different");
        let resp = CompletionResponse { text: "x".into(), provider: "p".into(), latency: Duration::ZERO, from_cache: false };
        cache.put(&other, &resp).unwrap();
        fs::rename(cache.path_for(&ResponseCache::key(&other)), cache.path_for(&ResponseCache::key(&req))).unwrap();
        assert!(matches!(cache.get(&req), Err(GatewayError::CacheIo { .. })));
    }
}
