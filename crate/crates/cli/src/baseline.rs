//! `lscd baseline`: frequency, count-vector and static-embedding baselines.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lscd_core::baselines::{cnt_ci_cd, freq_diff, procrustes_cosine, Corpus, StaticEmbeddings};
use lscd_core::scores::ChangeScores;
use serde::Serialize;

use crate::manifest::{self, InputDigest};

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaselineConfig {
    Fd {
        corpus1: PathBuf,
        corpus2: PathBuf,
        targets: PathBuf,
        output: PathBuf,
    },
    Count {
        corpus1: PathBuf,
        corpus2: PathBuf,
        targets: PathBuf,
        output: PathBuf,
        window: usize,
    },
    Procrustes {
        embeddings1: PathBuf,
        embeddings2: PathBuf,
        targets: PathBuf,
        output: PathBuf,
    },
}

impl BaselineConfig {
    fn output(&self) -> &PathBuf {
        match self {
            Self::Fd { output, .. } | Self::Count { output, .. } | Self::Procrustes { output, .. } => output,
        }
    }

    fn inputs(&self) -> [&PathBuf; 3] {
        match self {
            Self::Fd { corpus1, corpus2, targets, .. } | Self::Count { corpus1, corpus2, targets, .. } => {
                [corpus1, corpus2, targets]
            }
            Self::Procrustes { embeddings1, embeddings2, targets, .. } => [embeddings1, embeddings2, targets],
        }
    }
}

fn corpora(c1: &Path, c2: &Path) -> Result<(Corpus, Corpus)> {
    Ok((Corpus::load(c1)?, Corpus::load(c2)?))
}

pub fn run(cfg: &BaselineConfig) -> Result<ChangeScores> {
    let scores = match cfg {
        BaselineConfig::Fd { corpus1, corpus2, targets, .. } => {
            let (c1, c2) = corpora(corpus1, corpus2)?;
            freq_diff(&c1, &c2, &crate::read_targets(targets)?)?
        }
        BaselineConfig::Count { corpus1, corpus2, targets, window, .. } => {
            let (c1, c2) = corpora(corpus1, corpus2)?;
            cnt_ci_cd(&c1, &c2, &crate::read_targets(targets)?, *window)?
        }
        BaselineConfig::Procrustes { embeddings1, embeddings2, targets, .. } => {
            let e1 = StaticEmbeddings::load(embeddings1)?;
            let e2 = StaticEmbeddings::load(embeddings2)?;
            procrustes_cosine(&e1, &e2, &crate::read_targets(targets)?)?
        }
    };
    let inputs = cfg
        .inputs()
        .into_iter()
        .map(|p| InputDigest::of(p))
        .collect::<Result<Vec<_>>>()
        .context("hashing baseline inputs")?;
    manifest::write_scores(cfg.output(), "baseline", cfg, inputs, &scores)?;
    Ok(scores)
}
