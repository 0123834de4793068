//! Response cache: one JSON file per (doi, template), keyed by template
//! version/hash, model id, and temperature. Writers go through a temp file
//! and an atomic rename so concurrent extraction cannot tear entries.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::extract::templates::{hex_string, Template};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CacheEntry {
    pub doi: String,
    pub template: String,
    pub template_version: u32,
    pub template_hash: String,
    pub model_id: String,
    pub temperature: f64,
    pub response_text: String,
}

pub struct ResponseCache {
    root: PathBuf,
}

impl ResponseCache {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self { root })
    }

    fn doi_hash(doi: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(doi.as_bytes());
        hex_string(&hasher.finalize())
    }

    fn entry_path(&self, doi: &str, template: &Template) -> PathBuf {
        self.root
            .join(Self::doi_hash(doi))
            .join(format!("{}.{}.json", template.id, template.version))
    }

    /// Cached response for (doi, template, model, temperature), if the
    /// stored key still matches (a template edit invalidates entries).
    pub fn lookup(
        &self,
        doi: &str,
        template: &Template,
        model_id: &str,
        temperature: f64,
    ) -> Option<String> {
        let path = self.entry_path(doi, template);
        let raw = std::fs::read_to_string(path).ok()?;
        let entry: CacheEntry = serde_json::from_str(&raw).ok()?;
        let fresh = entry.template_hash == template.content_hash()
            && entry.model_id == model_id
            && entry.temperature == temperature
            && entry.template_version == template.version;
        fresh.then_some(entry.response_text)
    }

    pub fn store(
        &self,
        doi: &str,
        template: &Template,
        model_id: &str,
        temperature: f64,
        response_text: &str,
    ) -> Result<()> {
        let path = self.entry_path(doi, template);
        let dir = path.parent().unwrap();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let entry = CacheEntry {
            doi: doi.to_string(),
            template: template.id.to_string(),
            template_version: template.version,
            template_hash: template.content_hash(),
            model_id: model_id.to_string(),
            temperature,
            response_text: response_text.to_string(),
        };
        let body = serde_json::to_string_pretty(&entry)
            .map_err(|e| Error::InvalidInput(format!("cache serialize: {e}")))?;
        // unique temp name per writer, then atomic rename
        static COUNTER: std::sync::atomic::AtomicU64 = std::sync::atomic::AtomicU64::new(0);
        let nonce = COUNTER.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let tmp = path.with_extension(format!("tmp.{}.{nonce}", std::process::id()));
        std::fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extract::templates::{template, TemplateId};

    #[test]
    fn store_then_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path()).unwrap();
        let t = template(TemplateId::Code);
        assert!(cache.lookup("10.1016/x", &t, "m", 0.0).is_none());
        cache.store("10.1016/x", &t, "m", 0.0, "resp").unwrap();
        assert_eq!(cache.lookup("10.1016/x", &t, "m", 0.0).as_deref(), Some("resp"));
        // different model or temperature misses
        assert!(cache.lookup("10.1016/x", &t, "other", 0.0).is_none());
        assert!(cache.lookup("10.1016/x", &t, "m", 0.5).is_none());
    }

    #[test]
    fn layout_is_doi_hash_then_template_version() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path()).unwrap();
        let t = template(TemplateId::Data);
        cache.store("10.1016/x", &t, "m", 0.0, "resp").unwrap();
        let hash = ResponseCache::doi_hash("10.1016/x");
        assert!(dir.path().join(&hash).join("data.1.json").exists());
    }

    #[test]
    fn concurrent_writers_leave_a_valid_entry() {
        let dir = tempfile::tempdir().unwrap();
        let cache = std::sync::Arc::new(ResponseCache::new(dir.path()).unwrap());
        let mut handles = Vec::new();
        for i in 0..8 {
            let cache = std::sync::Arc::clone(&cache);
            handles.push(std::thread::spawn(move || {
                let t = template(TemplateId::Code);
                cache.store("10.1016/x", &t, "m", 0.0, &format!("resp{i}")).unwrap();
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        let t = template(TemplateId::Code);
        let got = cache.lookup("10.1016/x", &t, "m", 0.0).unwrap();
        assert!(got.starts_with("resp"));
    }
}
