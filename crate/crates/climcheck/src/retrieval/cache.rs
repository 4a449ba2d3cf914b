//! On-disk replay cache: `<dir>/<sample_id>/<source>.json`.

use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use climcheck_core::{SourceKind, SourceResult};
use serde::{Deserialize, Serialize};

use crate::error::CacheError;
use crate::fsutil;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Entry {
    v: u32,
    #[serde(flatten)]
    result: SourceResult,
}

#[derive(Debug, Clone)]
pub struct EvidenceCache {
    dir: PathBuf,
}

impl EvidenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        EvidenceCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, sample_id: &str, source: SourceKind) -> PathBuf {
        self.dir.join(sample_id).join(format!("{}.json", source.key()))
    }

    pub fn encode(result: &SourceResult) -> Vec<u8> {
        let entry = Entry { v: SCHEMA_VERSION, result: result.clone() };
        let mut bytes = serde_json::to_vec_pretty(&entry).expect("source results serialize");
        bytes.push(b'\n');
        bytes
    }

    pub fn get(&self, sample_id: &str, source: SourceKind) -> Result<Option<SourceResult>, CacheError> {
        let path = self.path(sample_id, source);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(CacheError::Io { path, source }),
        };
        let entry: Entry = serde_json::from_slice(&bytes)
            .map_err(|e| CacheError::Corrupt { path: path.clone(), message: e.to_string() })?;
        if entry.v != SCHEMA_VERSION {
            return Err(CacheError::Corrupt { path, message: format!("unsupported schema version {}", entry.v) });
        }
        if entry.result.source != source {
            return Err(CacheError::Corrupt { path, message: "entry belongs to another source".into() });
        }
        Ok(Some(entry.result))
    }

    pub fn put(&self, sample_id: &str, result: &SourceResult) -> Result<(), CacheError> {
        let path = self.path(sample_id, result.source);
        fsutil::write_atomic(&path, &Self::encode(result)).map_err(|source| CacheError::Io { path, source })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use climcheck_core::EvidenceItem;

    #[test]
    fn round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EvidenceCache::new(dir.path());
        let r = SourceResult::completed(
            SourceKind::FactCheck,
            vec![EvidenceItem::new("t", "s", "https://u").with_hint("False")],
            None,
            "2026-01-01T00:00:00.000Z",
        );
        assert!(cache.get("s1", SourceKind::FactCheck).unwrap().is_none());
        cache.put("s1", &r).unwrap();
        let path = dir.path().join("s1/factcheck.json");
        let on_disk = fs::read(&path).unwrap();
        assert!(String::from_utf8_lossy(&on_disk).contains("\"v\": 1"));
        let back = cache.get("s1", SourceKind::FactCheck).unwrap().unwrap();
        assert_eq!(back, r);
        assert_eq!(EvidenceCache::encode(&back), on_disk);
    }

    #[test]
    fn corrupt_entries_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cache = EvidenceCache::new(dir.path());
        fs::create_dir_all(dir.path().join("s1")).unwrap();
        fs::write(dir.path().join("s1/googlesearch.json"), "{not json").unwrap();
        assert!(matches!(cache.get("s1", SourceKind::GoogleSearch), Err(CacheError::Corrupt { .. })));
    }
}
