//! Subcommand implementations behind the `lscd` binary.

pub mod analyze;
pub mod baseline;
pub mod evaluate;
pub mod manifest;
pub mod score;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// Reads a target list: one word per line, blank lines ignored. Anything
/// after a tab is dropped, so gold files also work as target lists.
pub fn read_targets(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading targets {}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.split('\t').next().unwrap_or("").trim())
        .filter(|w| !w.is_empty())
        .map(str::to_owned)
        .collect())
}

/// Writes `contents`, creating missing parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
