//! Run manifests: which inputs produced which outputs, with digests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use slicerank_core::sram::ModelKind;

use crate::error::{CliError, CliResult};
use crate::io::write_json;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Relative to the manifest's directory when the file lies beneath it.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub configs: BTreeMap<String, FileDigest>,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub model_kinds: Vec<ModelKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub data: Vec<FileDigest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<FileDigest>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<FileDigest>,
}

/// Collects file references and writes the manifest once every file exists.
#[derive(Debug)]
pub struct ManifestBuilder {
    dir: PathBuf,
    command: String,
    configs: Vec<(String, PathBuf)>,
    seeds: Vec<u64>,
    model_kinds: Vec<ModelKind>,
    data: Vec<PathBuf>,
    checkpoints: Vec<PathBuf>,
    reports: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(dir: &Path, command: &str) -> Self {
        ManifestBuilder {
            dir: dir.to_path_buf(),
            command: command.into(),
            configs: Vec::new(),
            seeds: Vec::new(),
            model_kinds: Vec::new(),
            data: Vec::new(),
            checkpoints: Vec::new(),
            reports: Vec::new(),
        }
    }

    pub fn config(&mut self, role: &str, path: &Path) -> &mut Self {
        self.configs.push((role.into(), path.to_path_buf()));
        self
    }

    pub fn seeds(&mut self, seeds: &[u64]) -> &mut Self {
        self.seeds = seeds.to_vec();
        self
    }

    pub fn model(&mut self, kind: ModelKind) -> &mut Self {
        if !self.model_kinds.contains(&kind) {
            self.model_kinds.push(kind);
        }
        self
    }

    pub fn data(&mut self, path: &Path) -> &mut Self {
        self.data.push(path.to_path_buf());
        self
    }

    pub fn checkpoint(&mut self, path: &Path) -> &mut Self {
        self.checkpoints.push(path.to_path_buf());
        self
    }

    pub fn report(&mut self, path: &Path) -> &mut Self {
        self.reports.push(path.to_path_buf());
        self
    }

    fn digest(&self, path: &Path) -> CliResult<FileDigest> {
        let shown = path.strip_prefix(&self.dir).unwrap_or(path);
        Ok(FileDigest {
            path: shown.to_string_lossy().replace('\\', "/"),
            sha256: sha256_file(path)?,
        })
    }

    /// Digests every referenced file and writes `manifest.json`.
    pub fn write(&self) -> CliResult<RunManifest> {
        let all = |v: &[PathBuf]| v.iter().map(|p| self.digest(p)).collect::<CliResult<Vec<_>>>();
        let mut configs = BTreeMap::new();
        for (role, p) in &self.configs {
            configs.insert(role.clone(), self.digest(p)?);
        }
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.clone(),
            configs,
            seeds: self.seeds.clone(),
            model_kinds: self.model_kinds.clone(),
            data: all(&self.data)?,
            checkpoints: all(&self.checkpoints)?,
            reports: all(&self.reports)?,
        };
        write_json(&self.dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}

impl RunManifest {
    /// Files whose current digest differs from the recorded one (or that
    /// are missing), resolved against `dir`.
    pub fn stale_files(&self, dir: &Path) -> Vec<String> {
        let entries = self
            .configs
            .values()
            .chain(&self.data)
            .chain(&self.checkpoints)
            .chain(&self.reports);
        entries
            .filter(|f| {
                let p = Path::new(&f.path);
                let p = if p.is_absolute() { p.to_path_buf() } else { dir.join(p) };
                sha256_file(&p).map(|d| d != f.sha256).unwrap_or(true)
            })
            .map(|f| f.path.clone())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_paths_are_relative_and_verifiable() {
        let dir = tempfile::tempdir().unwrap();
        let report = dir.path().join("reports/r.json");
        fs::create_dir_all(report.parent().unwrap()).unwrap();
        fs::write(&report, b"{}").unwrap();
        let m = ManifestBuilder::new(dir.path(), "eval").report(&report).seeds(&[1, 2]).write().unwrap();
        assert_eq!(m.reports[0].path, "reports/r.json");
        assert!(m.stale_files(dir.path()).is_empty());
        fs::write(&report, b"{ }").unwrap();
        assert_eq!(m.stale_files(dir.path()), vec!["reports/r.json".to_string()]);
    }
}
