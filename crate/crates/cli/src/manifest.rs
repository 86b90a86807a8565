//! Run manifests written next to every output file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lscd_core::scores::{ChangeScores, ScoreFlag, WordFailure};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
        Ok(Self {
            path: path.to_owned(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        })
    }
}

#[derive(Debug, Serialize)]
pub struct FlaggedWord {
    pub word: String,
    pub flag: ScoreFlag,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: C,
    pub inputs: Vec<InputDigest>,
    pub scored: usize,
    pub flagged: Vec<FlaggedWord>,
    pub failures: Vec<WordFailure>,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: impl Into<String>, config: C, inputs: Vec<InputDigest>, scores: &ChangeScores) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config,
            inputs,
            scored: scores.scores.len(),
            flagged: scores
                .scores
                .iter()
                .filter_map(|s| {
                    s.flag.map(|flag| FlaggedWord {
                        word: s.word.clone(),
                        flag,
                    })
                })
                .collect(),
            failures: scores.failures.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        crate::write_file(path, &text)
    }
}

/// `scores.tsv` -> `scores.tsv.manifest.json`
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Writes ranked scores and their manifest; returns the manifest path.
pub fn write_scores<C: Serialize>(
    output: &Path,
    command: &str,
    config: C,
    inputs: Vec<InputDigest>,
    scores: &ChangeScores,
) -> Result<PathBuf> {
    crate::write_file(output, &scores.to_tsv())?;
    let path = manifest_path(output);
    RunManifest::new(command, config, inputs, scores).write(&path)?;
    Ok(path)
}
