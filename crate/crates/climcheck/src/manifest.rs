//! JSON-lines dataset manifests.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use climcheck_core::Sample;

use crate::error::{ConfigError, RunError};
use crate::fsutil;

/// Samples of one manifest plus the directory image paths resolve against.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub base_dir: PathBuf,
    pub samples: Vec<Sample>,
}

/// Sample ids become directory names in the cache, so they are restricted
/// to a portable file-name alphabet.
fn id_is_path_safe(id: &str) -> bool {
    !id.starts_with('.') && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let bad = |line: usize, message: String| ConfigError::Manifest { path: path.to_path_buf(), line, message };

        let mut samples = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let sample: Sample = serde_json::from_str(line).map_err(|e| bad(lineno, e.to_string()))?;
            sample.validate().map_err(|e| bad(lineno, e.to_string()))?;
            if !id_is_path_safe(&sample.id) {
                return Err(bad(lineno, format!("id `{}` is not a portable file name", sample.id)));
            }
            if !seen.insert(sample.id.clone()) {
                return Err(bad(lineno, format!("duplicate id `{}`", sample.id)));
            }
            let image = base_dir.join(&sample.image_ref);
            fs::File::open(&image).map_err(|e| bad(lineno, format!("image {} is unreadable: {e}", image.display())))?;
            samples.push(sample);
        }
        Ok(Manifest { base_dir, samples })
    }

    pub fn image_path(&self, sample: &Sample) -> PathBuf {
        self.base_dir.join(&sample.image_ref)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Write samples as JSON lines, atomically.
pub fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<(), RunError> {
    let mut buf = Vec::new();
    for row in rows {
        serde_json::to_writer(&mut buf, row).expect("rows serialize");
        buf.write_all(b"\n").expect("write to vec");
    }
    fsutil::write_atomic(path, &buf).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_manifest(dir: &Path, body: &str) -> PathBuf {
        fs::create_dir_all(dir.join("images")).unwrap();
        fs::write(dir.join("images/a.png"), b"png").unwrap();
        let p = dir.join("manifest.jsonl");
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_manifest(
            dir.path(),
            "{\"id\":\"a\",\"claim\":\"c\",\"image\":\"images/a.png\",\"gold\":\"false\"}\n\n",
        );
        let m = Manifest::load(&p).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m.image_path(&m.samples[0]).ends_with("images/a.png"));
    }

    #[test]
    fn rejects_duplicates_missing_images_and_unsafe_ids() {
        let dir = tempfile::tempdir().unwrap();
        let row = "{\"id\":\"a\",\"claim\":\"c\",\"image\":\"images/a.png\"}\n";
        let p = write_manifest(dir.path(), &row.repeat(2));
        let err = Manifest::load(&p).unwrap_err().to_string();
        assert!(err.contains(":2:") && err.contains("duplicate"), "{err}");

        let p = write_manifest(dir.path(), "{\"id\":\"b\",\"claim\":\"c\",\"image\":\"images/missing.png\"}\n");
        assert!(Manifest::load(&p).unwrap_err().to_string().contains("unreadable"));

        let p = write_manifest(dir.path(), "{\"id\":\"../x\",\"claim\":\"c\",\"image\":\"images/a.png\"}\n");
        assert!(Manifest::load(&p).is_err());

        let p = write_manifest(dir.path(), "{\"id\":\"x\",\"claim\":\"  \",\"image\":\"images/a.png\"}\n");
        assert!(Manifest::load(&p).is_err());
    }
}
