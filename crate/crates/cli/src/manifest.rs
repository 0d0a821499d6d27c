use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to a temp file in the target directory, then renames it
/// over `path`, so readers never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| CliError::Io(format!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Input path (as written in the config, or artifact name) -> sha256.
    pub inputs: BTreeMap<String, String>,
    /// Artifact file name -> sha256.
    pub outputs: BTreeMap<String, String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn new(config_sha256: String, seed: u64) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256,
            seed,
            stages: BTreeMap::new(),
        }
    }

    /// Loads the manifest in `out_dir`, starting fresh if it is missing or
    /// belongs to a different config or seed.
    pub fn load_or_new(out_dir: &Path, config_sha256: &str, seed: u64) -> Self {
        let fresh = || RunManifest::new(config_sha256.to_string(), seed);
        match std::fs::read(out_dir.join(MANIFEST_FILE)) {
            Ok(bytes) => match serde_json::from_slice::<RunManifest>(&bytes) {
                Ok(m) if m.config_sha256 == config_sha256 && m.seed == seed => m,
                _ => fresh(),
            },
            Err(_) => fresh(),
        }
    }

    pub fn save(&self, out_dir: &Path) -> Result<(), CliError> {
        let mut json = serde_json::to_vec_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        json.push(b'\n');
        write_atomic(&out_dir.join(MANIFEST_FILE), &json)
    }

    /// Output digests of every stage, without timings.
    pub fn output_digests(&self) -> BTreeMap<String, BTreeMap<String, String>> {
        self.stages.iter().map(|(k, v)| (k.clone(), v.outputs.clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn manifest_resets_on_new_config() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("abc".into(), 1);
        m.stages.insert("pretrain".into(), StageRecord { inputs: BTreeMap::new(), outputs: BTreeMap::new(), seconds: 0.5 });
        m.save(dir.path()).unwrap();
        assert_eq!(RunManifest::load_or_new(dir.path(), "abc", 1).stages.len(), 1);
        assert!(RunManifest::load_or_new(dir.path(), "abc", 2).stages.is_empty());
    }
}
