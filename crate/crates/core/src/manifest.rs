//! Stage manifests: what went into an artifact, hashed so reruns can be
//! compared and skipped.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub version: String,
    pub seed: u64,
    /// Hash of the stage-relevant configuration, paths excluded.
    pub config: String,
    /// Input name to sha256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

impl Manifest {
    pub fn new(stage: &str, seed: u64, config: &str) -> Self {
        Manifest {
            stage: stage.to_string(),
            version: VERSION.to_string(),
            seed,
            config: sha256_hex(config.as_bytes()),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    /// Records an input file under `name`, keyed by content only.
    pub fn input(&mut self, name: &str, path: &Path) -> Result<&mut Self> {
        self.inputs.insert(name.to_string(), hash_file(path)?);
        Ok(self)
    }

    pub fn input_bytes(&mut self, name: &str, bytes: &[u8]) -> &mut Self {
        self.inputs.insert(name.to_string(), sha256_hex(bytes));
        self
    }

    pub fn output(&mut self, name: &str) -> &mut Self {
        self.outputs.push(name.to_string());
        self
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("manifest serializes").as_bytes())
    }

    /// The first line stamped on text artifacts.
    pub fn header(&self) -> String {
        format!("manifest={}", self.hash())
    }

    pub fn path_in(dir: &Path, stage: &str) -> PathBuf {
        dir.join(format!("manifest.{stage}.json"))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        std::fs::write(Self::path_in(dir, &self.stage), s)?;
        Ok(())
    }

    pub fn read(dir: &Path, stage: &str) -> Result<Option<Manifest>> {
        let p = Self::path_in(dir, stage);
        match std::fs::read_to_string(&p) {
            Ok(s) => Ok(Some(serde_json::from_str(&s)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// True when `dir` already holds this stage's outputs from an identical
    /// manifest, each carrying its hash.
    pub fn is_current(&self, dir: &Path) -> Result<bool> {
        let Some(old) = Manifest::read(dir, &self.stage)? else {
            return Ok(false);
        };
        let stamp = self.hash();
        if old != *self {
            return Ok(false);
        }
        for o in &self.outputs {
            let Ok(body) = std::fs::read_to_string(dir.join(o)) else {
                return Ok(false);
            };
            if !body.contains(&stamp) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Reads the `manifest=` stamp from an artifact's first lines, if any.
pub fn stamp_of(body: &str) -> Option<&str> {
    body.lines().take(2).find_map(|l| l.strip_prefix("# manifest="))
}
