use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use sluice_core::training::TrainConfig;
use sluice_core::{Error, Result};

#[derive(Debug, Serialize)]
pub struct CorpusFile {
    pub task: String,
    pub split: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to rerun a command: written into the output directory
/// before any training starts.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// The resolved configuration in config-file syntax.
    pub config_text: String,
    pub config: TrainConfig,
    pub corpora: Vec<CorpusFile>,
    /// Command-specific settings (sweep, seeds, split, ...).
    pub extra: serde_json::Value,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Checksums of every file the config points at, paths resolved against
/// `base`.
pub fn corpus_files(config: &TrainConfig, base: &Path) -> Result<Vec<CorpusFile>> {
    let mut out = Vec::new();
    for (task, d) in &config.data {
        let mut add = |split: &str, p: &Option<PathBuf>| -> Result<()> {
            if let Some(p) = p {
                let path = base.join(p);
                out.push(CorpusFile {
                    task: task.clone(),
                    split: split.to_string(),
                    sha256: sha256_file(&path)?,
                    path,
                });
            }
            Ok(())
        };
        add("train", &d.train)?;
        add("dev", &d.dev)?;
        add("test", &d.test)?;
        for (split, p) in &d.extra {
            add(split, &Some(p.clone()))?;
        }
    }
    Ok(out)
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: &TrainConfig,
        base: &Path,
        output_dir: &Path,
        extra: serde_json::Value,
    ) -> Result<Self> {
        Ok(RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: config.seed,
            output_dir: output_dir.to_path_buf(),
            config_text: config.to_config_string(),
            config: config.clone(),
            corpora: corpus_files(config, base)?,
            extra,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}
