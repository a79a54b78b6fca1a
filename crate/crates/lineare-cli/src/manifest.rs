//! Run manifests: everything needed to reproduce a training run bit for
//! bit (config snapshot, dataset fingerprint, seed, artifact paths).

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use lineare::trainer::TrainConfig;
use lineare::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileFingerprint {
    pub name: String,
    pub bytes: u64,
    pub fnv1a64: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub dataset_dir: String,
    pub dataset_files: Vec<FileFingerprint>,
    pub seed: u64,
    pub config: TrainConfig,
    pub checkpoint: String,
}

/// FNV-1a over the raw file bytes; cheap and stable across platforms.
fn fnv1a64(path: &Path) -> Result<(u64, u64)> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = BufReader::new(file);
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut total: u64 = 0;
    let mut buf = [0u8; 8192];
    loop {
        let n = reader.read(&mut buf).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if n == 0 {
            break;
        }
        total += n as u64;
        for &b in &buf[..n] {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    }
    Ok((hash, total))
}

pub fn fingerprint_dataset(dir: &Path) -> Result<Vec<FileFingerprint>> {
    let mut out = Vec::new();
    for name in ["train.txt", "valid.txt", "test.txt"] {
        let path = dir.join(name);
        let (hash, bytes) = fnv1a64(&path)?;
        out.push(FileFingerprint {
            name: name.to_string(),
            bytes,
            fnv1a64: format!("{hash:016x}"),
        });
    }
    Ok(out)
}

impl RunManifest {
    pub fn for_train(dataset_dir: &Path, cfg: &TrainConfig, checkpoint: &str) -> Result<Self> {
        Ok(RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: "train".to_string(),
            dataset_dir: dataset_dir.display().to_string(),
            dataset_files: fingerprint_dataset(dataset_dir)?,
            seed: cfg.seed,
            config: cfg.clone(),
            checkpoint: checkpoint.to_string(),
        })
    }
}
