//! Staged outputs, atomic writes and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
struct InputDigest {
    path: String,
    digest: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    params: &'a serde_json::Value,
    inputs: &'a [InputDigest],
    seed: Option<u64>,
    version: &'static str,
    outputs: Vec<&'a str>,
}

/// Collects everything a subcommand produces; nothing touches disk until `commit`.
pub struct Run {
    subcommand: String,
    out_dir: PathBuf,
    inputs: Vec<InputDigest>,
    files: Vec<(String, Vec<u8>)>,
    params: serde_json::Value,
    seed: Option<u64>,
}

impl Run {
    pub fn new(subcommand: &str, out_dir: &Path) -> Self {
        Run {
            subcommand: subcommand.to_string(),
            out_dir: out_dir.to_path_buf(),
            inputs: Vec::new(),
            files: Vec::new(),
            params: serde_json::Value::Null,
            seed: None,
        }
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            digest: hex::encode(Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    pub fn params(&mut self, params: &impl Serialize) {
        self.params = serde_json::to_value(params).expect("parameters serialize");
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body.into_bytes()));
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) {
        let mut body = serde_json::to_string_pretty(value).expect("outputs serialize");
        body.push('\n');
        self.text(name, body);
    }

    pub fn commit(self) -> Result<()> {
        fs::create_dir_all(&self.out_dir).with_context(|| format!("cannot create {}", self.out_dir.display()))?;
        let manifest_name = format!("{}.manifest.json", self.subcommand.replace(' ', "-"));
        let manifest = Manifest {
            subcommand: &self.subcommand,
            params: &self.params,
            inputs: &self.inputs,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION"),
            outputs: self.files.iter().map(|(n, _)| n.as_str()).collect(),
        };
        let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        body.push('\n');
        for (name, bytes) in &self.files {
            write_atomic(&self.out_dir.join(name), bytes)?;
        }
        write_atomic(&self.out_dir.join(manifest_name), body.as_bytes())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let file_name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{file_name}.tmp"));
    let mut f = fs::File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))
}
