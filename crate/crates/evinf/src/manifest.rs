//! Run manifests: what was run, on which inputs, and what it produced.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{read_bytes, read_to_string, write_bytes, CliError, Result};

/// A file or directory with its content hash.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

impl Artifact {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(Artifact { path: path.display().to_string(), sha256: hash_path(path)? })
    }
}

/// Written before a command runs and completed afterwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    /// Full argument vector, program name first.
    pub argv: Vec<String>,
    /// Working directory the arguments are relative to.
    pub cwd: String,
    pub data_root: Option<String>,
    pub config_path: Option<String>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<String>,
    /// Output hashes, filled in once the command succeeds.
    pub produced: Option<Vec<Artifact>>,
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        RunManifest {
            tool: format!("evinf {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            argv: argv.to_vec(),
            cwd: std::env::current_dir().map(|p| p.display().to_string()).unwrap_or_default(),
            data_root: std::env::var(crate::DATA_ROOT_ENV).ok(),
            config_path: None,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            produced: None,
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(Artifact::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_bytes(path, self.to_json() + "\n")
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&read_to_string(path)?).map_err(|e| CliError::data(path, e))
    }

    /// Hash every declared output.
    pub fn complete(&mut self) -> Result<()> {
        let produced =
            self.outputs.iter().map(|p| Artifact::of(Path::new(p))).collect::<Result<Vec<_>>>()?;
        self.produced = Some(produced);
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Hash of a file's bytes, or of a directory's sorted relative paths and
/// file contents.
pub fn hash_path(path: &Path) -> Result<String> {
    if path.is_file() {
        return Ok(sha256_hex(&read_bytes(path)?));
    }
    if !path.is_dir() {
        return Err(CliError::data(path, "not found"));
    }
    let mut files = Vec::new();
    collect_files(path, path, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for rel in files {
        h.update(rel.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(read_bytes(&path.join(&rel))?);
        h.update([0]);
    }
    Ok(hex(&h.finalize()))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            out.push(path.strip_prefix(root).expect("under root").to_path_buf());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_hash_depends_on_names_and_contents() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "one").unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        std::fs::write(dir.path().join("sub/b.txt"), "two").unwrap();
        let first = hash_path(dir.path()).unwrap();
        assert_eq!(first, hash_path(dir.path()).unwrap());
        std::fs::write(dir.path().join("sub/b.txt"), "three").unwrap();
        assert_ne!(first, hash_path(dir.path()).unwrap());
        assert!(hash_path(&dir.path().join("missing")).is_err());
    }

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
