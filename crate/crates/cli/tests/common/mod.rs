#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lscd_core::bundle::{bundle_dir, write_bundle};
use lscd_core::{Period, UsageTensor};

pub fn lscd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lscd"))
        .args(args)
        .env("LSCD_WORKERS", "2")
        .output()
        .expect("spawn lscd")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Writes a single-layer bundle from per-period row vectors.
pub fn add_bundle(root: &Path, word: &str, t1: &[Vec<f32>], t2: &[Vec<f32>]) -> PathBuf {
    let tensor = |period, rows: &[Vec<f32>]| {
        let dim = rows.first().map_or(2, Vec::len);
        let data: Vec<f32> = rows.iter().flatten().copied().collect();
        UsageTensor::new(word, period, rows.len(), 1, dim, data).unwrap()
    };
    let dir = bundle_dir(root, word);
    write_bundle(&dir, word, &tensor(Period::T1, t1), &tensor(Period::T2, t2)).unwrap();
    dir
}

/// Two words: `stable` keeps its usages, `shifted` moves to an orthogonal
/// direction.
pub fn planted_change(root: &Path) {
    add_bundle(
        root,
        "stable",
        &[vec![1.0, 0.1], vec![0.9, -0.1], vec![1.1, 0.0]],
        &[vec![1.0, 0.0], vec![0.95, 0.05], vec![1.05, -0.05]],
    );
    add_bundle(
        root,
        "shifted",
        &[vec![1.0, 0.1], vec![0.9, -0.1], vec![1.1, 0.0]],
        &[vec![0.1, 1.0], vec![-0.1, 0.9], vec![0.0, 1.1]],
    );
}

pub fn write(path: &Path, text: &str) -> PathBuf {
    std::fs::write(path, text).unwrap();
    path.to_owned()
}
