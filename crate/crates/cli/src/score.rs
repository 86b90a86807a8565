//! `lscd score`: change scores for every bundle under a directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lscd_core::bundle::{self, MANIFEST_FILE};
use lscd_core::clustering::ApConfig;
use lscd_core::metrics::{self, PrtVariant};
use lscd_core::scores::{ChangeScores, Metric, WordScore};
use lscd_core::usage::{aggregate_layers, subsample, LayerStrategy, Period, UsageMatrix};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::manifest::{self, InputDigest};

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub bundles_dir: PathBuf,
    /// Restrict scoring to these words; every one must have a bundle.
    pub targets: Option<PathBuf>,
    pub metric: Metric,
    pub prt_variant: PrtVariant,
    pub layer: LayerStrategy,
    pub subsample_cap: Option<usize>,
    pub seed: u64,
    pub output: PathBuf,
    pub clustering: ApConfig,
    /// Does not affect results, so it stays out of the manifest.
    #[serde(skip)]
    pub workers: usize,
}

impl RunConfig {
    pub fn new(bundles_dir: impl Into<PathBuf>, metric: Metric, output: impl Into<PathBuf>) -> Self {
        Self {
            bundles_dir: bundles_dir.into(),
            targets: None,
            metric,
            prt_variant: PrtVariant::default(),
            layer: LayerStrategy::TopLayer,
            subsample_cap: None,
            seed: 0,
            output: output.into(),
            clustering: ApConfig::default(),
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.subsample_cap == Some(0) {
            bail!("subsample cap must be >= 1");
        }
        if self.workers == 0 {
            bail!("need at least one worker");
        }
        if self.metric == Metric::Jsd {
            self.clustering.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct ScoreOutcome {
    pub scores: ChangeScores,
    pub manifest: PathBuf,
}

/// Per-word, per-period subsampling seed derived from the run seed.
pub fn derive_seed(seed: u64, word: &str, period: Period) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(word.as_bytes());
    h.update(period.to_string().as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn prepare(m: UsageMatrix, cfg: &RunConfig) -> Result<UsageMatrix> {
    Ok(match cfg.subsample_cap {
        Some(cap) => subsample(&m, cap, derive_seed(cfg.seed, m.word(), m.period()))?,
        None => m,
    })
}

/// Scores one bundle directory. Returns the manifest word (or the directory
/// name when the manifest is unreadable).
fn score_bundle(dir: &Path, cfg: &RunConfig) -> (String, Result<WordScore>) {
    let fallback = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let word = bundle::read_manifest(dir).map(|m| m.word).unwrap_or(fallback);
    let outcome = (|| -> Result<WordScore> {
        let (t1, t2) = bundle::load_bundle(dir)?;
        let u1 = prepare(aggregate_layers(&t1, cfg.layer)?, cfg)?;
        let u2 = prepare(aggregate_layers(&t2, cfg.layer)?, cfg)?;
        let score = match cfg.metric {
            Metric::Prt => metrics::prt(&u1, &u2, cfg.prt_variant)?,
            Metric::Apd => metrics::apd(&u1, &u2)?,
            Metric::Jsd => metrics::jsd_score(&u1, &u2, &cfg.clustering)?,
        };
        Ok(score.into())
    })();
    (word, outcome)
}

fn bundle_inputs(dir: &Path) -> Vec<InputDigest> {
    [MANIFEST_FILE, "t1.bin", "t2.bin"]
        .iter()
        .filter_map(|f| InputDigest::of(&dir.join(f)).ok())
        .collect()
}

/// Runs the scoring pass and writes the TSV plus its manifest. Words that
/// fail are listed in the outcome's `failures`.
pub fn run(cfg: &RunConfig) -> Result<ScoreOutcome> {
    cfg.validate()?;
    let dirs: Vec<(String, Option<PathBuf>)> = match &cfg.targets {
        Some(path) => crate::read_targets(path)?
            .into_iter()
            .map(|w| {
                let dir = bundle::bundle_dir(&cfg.bundles_dir, &w);
                let found = dir.join(MANIFEST_FILE).is_file();
                (w, found.then_some(dir))
            })
            .collect(),
        None => bundle::list_bundles(&cfg.bundles_dir)
            .with_context(|| format!("listing bundles in {}", cfg.bundles_dir.display()))?
            .into_iter()
            .map(|d| (String::new(), Some(d)))
            .collect(),
    };
    if dirs.is_empty() {
        bail!("no targets found in {}", cfg.bundles_dir.display());
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .context("building worker pool")?;
    let results: Vec<(String, Result<WordScore>, Vec<InputDigest>)> = pool.install(|| {
        dirs.par_iter()
            .map(|(word, dir)| match dir {
                Some(dir) => {
                    let (w, outcome) = score_bundle(dir, cfg);
                    (w, outcome, bundle_inputs(dir))
                }
                None => (
                    word.clone(),
                    Err(anyhow::anyhow!("no bundle for {word:?} in {}", cfg.bundles_dir.display())),
                    Vec::new(),
                ),
            })
            .collect()
    });

    let mut scores = ChangeScores::default();
    let mut inputs = Vec::new();
    for (word, outcome, digests) in results {
        match outcome {
            Ok(s) => scores.scores.push(s),
            Err(e) => {
                log::error!("{word}: {e:#}");
                scores.failures.push(lscd_core::scores::WordFailure {
                    word,
                    reason: format!("{e:#}"),
                });
            }
        }
        inputs.extend(digests);
    }
    let manifest = manifest::write_scores(&cfg.output, "score", cfg, inputs, &scores)?;
    Ok(ScoreOutcome { scores, manifest })
}
