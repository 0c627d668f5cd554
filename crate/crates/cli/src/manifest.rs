//! Run manifests.
//!
//! A manifest is a config file: the `command` key plus every resolved key of
//! the run. Comment lines carry content hashes of inputs and outputs, plus the
//! random generator's name. `odm rerun` replays it.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use crate::config::{Config, ConfigError};

pub const FILE_NAME: &str = "manifest.txt";

/// Git-style object hash: SHA-256 over `blob <len>\0<content>`, the object
/// format of a SHA-256 git repository.
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(blob_hash(&bytes))
}

#[derive(Debug)]
pub struct Manifest {
    pub command: String,
    pub inputs: Vec<(String, PathBuf)>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Self { command: command.to_string(), inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn input(&mut self, key: &str, path: &Path) {
        self.inputs.push((key.to_string(), path.to_path_buf()));
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write(&self, config: &Config, out_dir: &Path) -> Result<()> {
        let mut text = String::from("# odm run manifest\n");
        let _ = writeln!(text, "# odm {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "# rng {}", odm_core::rng::GENERATOR_NAME);
        for (key, path) in &self.inputs {
            let _ = writeln!(text, "# input {key} {} {}", file_hash(path)?, path.display());
        }
        for name in &self.outputs {
            let _ = writeln!(text, "# output {name} {}", file_hash(&out_dir.join(name))?);
        }
        let _ = writeln!(text, "command = {}", self.command);
        for (key, value) in config.resolved() {
            let _ = writeln!(text, "{key} = {value}");
        }
        let path = out_dir.join(FILE_NAME);
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

/// Reads a manifest back into its command and config, checking that every
/// recorded input still has the recorded content.
pub fn load(path: &Path) -> Result<(String, Config)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# input ") {
            let mut parts = rest.splitn(3, ' ');
            let (Some(key), Some(hash), Some(input)) = (parts.next(), parts.next(), parts.next()) else {
                bail!(ConfigError::Syntax { origin: path.display().to_string(), line: 0, text: line.to_string() });
            };
            let now = file_hash(Path::new(input))?;
            if now != hash {
                bail!(ConfigError::Invalid {
                    key: key.to_string(),
                    value: input.to_string(),
                    expected: format!("content hash {hash}, found {now}"),
                });
            }
        }
    }
    let mut config = Config::parse(&text, &path.display().to_string())?;
    let command = config.remove("command").ok_or_else(|| ConfigError::Missing("command".into()))?;
    Ok((command, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_git_sha256_object_format() {
        // `printf 'blob 6\0hello\n' | sha256sum`
        assert_eq!(
            blob_hash(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }
}
