use std::collections::{BTreeMap, HashSet};

use ndarray::Array2;

use super::Corpus;
use crate::scores::{ChangeScores, WordScore};
use crate::{Error, Result};

pub const DEFAULT_WINDOW: usize = 10;

/// `|f1(w) - f2(w)|` with `f` the relative frequency (count / corpus tokens).
pub fn freq_diff(c1: &Corpus, c2: &Corpus, targets: &[String]) -> Result<ChangeScores> {
    for (c, name) in [(c1, "first"), (c2, "second")] {
        if c.is_empty() {
            return Err(Error::Empty(format!("{name} corpus has no tokens")));
        }
    }
    let (t1, t2) = (c1.token_count() as f64, c2.token_count() as f64);
    let mut out = ChangeScores::default();
    for w in targets {
        let value = (c1.count(w) as f64 / t1 - c2.count(w) as f64 / t2).abs();
        out.push(w, Ok(WordScore::new(w.clone(), value)));
    }
    Ok(out)
}

/// Co-occurrence counts of `target` with every word within `window` tokens
/// on either side, summed over all occurrences. Windows stop at sentence
/// boundaries; an occurrence does not co-occur with itself.
pub fn cooccurrence_counts<'c>(corpus: &'c Corpus, target: &str, window: usize) -> BTreeMap<&'c str, f64> {
    let mut counts = BTreeMap::new();
    for sentence in corpus.sentences() {
        for (pos, token) in sentence.iter().enumerate() {
            if token != target {
                continue;
            }
            let lo = pos.saturating_sub(window);
            let hi = (pos + window).min(sentence.len() - 1);
            for (ctx_pos, ctx) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
                if ctx_pos != pos {
                    *counts.entry(ctx.as_str()).or_insert(0.0) += 1.0;
                }
            }
        }
    }
    counts
}

/// Dense count vectors, one row per target, one column per context word.
pub fn count_vectors(corpus: &Corpus, targets: &[String], window: usize, context_vocab: &[String]) -> Result<Array2<f64>> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be >= 1".into()));
    }
    let mut m = Array2::zeros((targets.len(), context_vocab.len()));
    for (row, target) in targets.iter().enumerate() {
        let counts = cooccurrence_counts(corpus, target, window);
        for (col, ctx) in context_vocab.iter().enumerate() {
            if let Some(&c) = counts.get(ctx.as_str()) {
                m[[row, col]] = c;
            }
        }
    }
    Ok(m)
}

fn vocabulary(c: &Corpus) -> HashSet<&str> {
    c.sentences().iter().flatten().map(String::as_str).collect()
}

/// Count vectors per corpus, restricted to the context words both corpora
/// share, compared by cosine distance.
pub fn cnt_ci_cd(c1: &Corpus, c2: &Corpus, targets: &[String], window: usize) -> Result<ChangeScores> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be >= 1".into()));
    }
    let (v1, v2) = (vocabulary(c1), vocabulary(c2));
    let shared: HashSet<&str> = v1.intersection(&v2).copied().collect();

    let mut out = ChangeScores::default();
    for target in targets {
        out.push(target, score_target(c1, c2, target, window, &shared));
    }
    Ok(out)
}

fn score_target(c1: &Corpus, c2: &Corpus, target: &str, window: usize, shared: &HashSet<&str>) -> Result<WordScore> {
    for (c, name) in [(c1, "first"), (c2, "second")] {
        if c.count(target) == 0 {
            return Err(Error::Empty(format!("{target:?} does not occur in the {name} corpus")));
        }
    }
    let a = cooccurrence_counts(c1, target, window);
    let b = cooccurrence_counts(c2, target, window);
    let restrict = |m: &BTreeMap<&str, f64>| -> BTreeMap<String, f64> {
        m.iter()
            .filter(|(k, _)| shared.contains(*k))
            .map(|(k, v)| ((*k).to_owned(), *v))
            .collect()
    };
    let (a, b) = (restrict(&a), restrict(&b));
    let norm = |m: &BTreeMap<String, f64>| m.values().map(|v| v * v).sum::<f64>().sqrt();
    let (na, nb) = (norm(&a), norm(&b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm(format!(
            "{target:?} has no co-occurrences with shared context words"
        )));
    }
    let dot: f64 = a.iter().filter_map(|(k, v)| b.get(k).map(|w| v * w)).sum();
    let cos = (dot / (na * nb)).clamp(-1.0, 1.0);
    Ok(WordScore::new(target, 1.0 - cos))
}
