//! On-disk usage bundles.
//!
//! A bundle is one directory per target word:
//!
//! ```text
//! <root>/<percent-encoded word>/manifest.json
//! <root>/<percent-encoded word>/t1.bin
//! <root>/<percent-encoded word>/t2.bin
//! ```
//!
//! The manifest records `word`, `dim`, `layers`, `n_t1`, `n_t2`,
//! `dtype = "f32le"` and `layout = "n-l-d"`. Tensor files are raw
//! little-endian IEEE-754 `f32` values, occurrence-major, then layer, then
//! dimension, with no header. A tensor file must hold exactly
//! `n * layers * dim * 4` bytes.

use std::fs;
use std::path::{Path, PathBuf};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};

use crate::usage::{Period, UsageTensor};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const DTYPE_F32LE: &str = "f32le";
pub const LAYOUT_NLD: &str = "n-l-d";

const PATH_SAFE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_').remove(b'.');

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub word: String,
    pub dim: usize,
    pub layers: usize,
    pub n_t1: usize,
    pub n_t2: usize,
    pub dtype: String,
    pub layout: String,
}

impl Manifest {
    fn count(&self, period: Period) -> usize {
        match period {
            Period::T1 => self.n_t1,
            Period::T2 => self.n_t2,
        }
    }
}

pub fn tensor_file_name(period: Period) -> &'static str {
    match period {
        Period::T1 => "t1.bin",
        Period::T2 => "t2.bin",
    }
}

/// Directory name used for `word` under a bundle root.
pub fn encode_word(word: &str) -> String {
    let encoded = utf8_percent_encode(word, PATH_SAFE).to_string();
    if encoded.chars().all(|c| c == '.') {
        encoded.replace('.', "%2E")
    } else {
        encoded
    }
}

pub fn bundle_dir(root: &Path, word: &str) -> PathBuf {
    root.join(encode_word(word))
}

/// Writes `t1` and `t2` for `word` into the bundle directory `dir`.
pub fn write_bundle(dir: &Path, word: &str, t1: &UsageTensor, t2: &UsageTensor) -> Result<()> {
    for (t, period) in [(t1, Period::T1), (t2, Period::T2)] {
        if t.word() != word {
            return Err(Error::InvalidArgument(format!(
                "tensor for {period} belongs to {:?}, bundle is for {word:?}",
                t.word()
            )));
        }
        if t.period() != period {
            return Err(Error::InvalidArgument(format!(
                "tensor passed as {period} is tagged {}",
                t.period()
            )));
        }
    }
    if t1.layers() != t2.layers() {
        return Err(Error::LayerMismatch {
            t1: t1.layers(),
            t2: t2.layers(),
        });
    }
    if t1.dim() != t2.dim() {
        return Err(Error::DimensionMismatch {
            left: t1.dim(),
            right: t2.dim(),
        });
    }

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for t in [t1, t2] {
        let path = dir.join(tensor_file_name(t.period()));
        let bytes: Vec<u8> = t.data().iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    }

    let manifest = Manifest {
        word: word.to_owned(),
        dim: t1.dim(),
        layers: t1.layers(),
        n_t1: t1.occurrences(),
        n_t2: t2.occurrences(),
        dtype: DTYPE_F32LE.to_owned(),
        layout: LAYOUT_NLD.to_owned(),
    };
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| Error::Manifest {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    let bad = |reason: String| Error::Manifest {
        path: path.clone(),
        reason,
    };
    if manifest.dtype != DTYPE_F32LE {
        return Err(bad(format!("unsupported dtype {:?}", manifest.dtype)));
    }
    if manifest.layout != LAYOUT_NLD {
        return Err(bad(format!("unsupported layout {:?}", manifest.layout)));
    }
    if manifest.dim == 0 || manifest.layers == 0 {
        return Err(bad("dim and layers must be >= 1".into()));
    }
    Ok(manifest)
}

fn read_tensor(dir: &Path, manifest: &Manifest, period: Period) -> Result<UsageTensor> {
    let path = dir.join(tensor_file_name(period));
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let n = manifest.count(period);
    let expected = (n * manifest.layers * manifest.dim * 4) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            what: path.display().to_string(),
            expected,
            found: bytes.len() as u64,
        });
    }
    let data: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    UsageTensor::new(
        manifest.word.clone(),
        period,
        n,
        manifest.layers,
        manifest.dim,
        data,
    )
}

/// Loads both period tensors from a bundle directory.
pub fn load_bundle(dir: &Path) -> Result<(UsageTensor, UsageTensor)> {
    let manifest = read_manifest(dir)?;
    let t1 = read_tensor(dir, &manifest, Period::T1)?;
    let t2 = read_tensor(dir, &manifest, Period::T2)?;
    Ok((t1, t2))
}

/// Bundle directories directly under `root` (those holding a manifest),
/// sorted by directory name.
pub fn list_bundles(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if path.is_dir() && path.join(MANIFEST_FILE).is_file() {
            dirs.push(path);
        }
    }
    dirs.sort();
    Ok(dirs)
}
