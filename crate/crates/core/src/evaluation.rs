//! Spearman evaluation against gold rankings and score-distribution analysis.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result};

/// Significance level used for the `significant` flag.
pub const ALPHA: f64 = 0.05;

/// Largest sample size for which p-values are computed by enumerating all
/// permutations.
pub const EXACT_PERMUTATION_MAX_N: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueMethod {
    ExactPermutation,
    TApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
    pub significant: bool,
    pub method: PValueMethod,
    /// Gold words without a prediction; they do not enter `rho`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<String>,
}

impl EvalReport {
    pub fn new(rho: f64, p_value: f64, n: usize, method: PValueMethod) -> Self {
        Self {
            rho,
            p_value,
            n,
            significant: p_value < ALPHA,
            method,
            excluded: Vec::new(),
        }
    }
}

/// Fractional ranks starting at 1; ties share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Empty("cannot rank an empty list".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("values to rank".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    Ok(ranks)
}

struct RankMoments {
    mean_x: f64,
    mean_y: f64,
    sxx: f64,
    syy: f64,
}

fn moments(rx: &[f64], ry: &[f64]) -> RankMoments {
    let n = rx.len() as f64;
    let mean_x = rx.iter().sum::<f64>() / n;
    let mean_y = ry.iter().sum::<f64>() / n;
    RankMoments {
        mean_x,
        mean_y,
        sxx: rx.iter().map(|v| (v - mean_x).powi(2)).sum(),
        syy: ry.iter().map(|v| (v - mean_y).powi(2)).sum(),
    }
}

fn covariance_sum(rx: &[f64], ry: &[f64], m: &RankMoments) -> f64 {
    rx.iter()
        .zip(ry)
        .map(|(a, b)| (a - m.mean_x) * (b - m.mean_y))
        .sum()
}

/// Two-sided p-value from all `n!` reorderings of `ry` against `rx`.
fn exact_permutation_p(rx: &[f64], ry: &[f64]) -> f64 {
    let m = moments(rx, ry);
    let observed = covariance_sum(rx, ry, &m).abs();
    let tol = 1e-9 * (m.sxx * m.syy).sqrt().max(1.0);

    // Heap's algorithm, iterative form.
    let n = ry.len();
    let mut perm = ry.to_vec();
    let mut counters = vec![0usize; n];
    let mut extreme = 0u64;
    let mut total = 0u64;
    let mut visit = |p: &[f64]| {
        total += 1;
        if covariance_sum(rx, p, &m).abs() >= observed - tol {
            extreme += 1;
        }
    };
    visit(&perm);
    let mut i = 0;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            visit(&perm);
            counters[i] += 1;
            i = 0;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    extreme as f64 / total as f64
}

fn t_approximation_p(rho: f64, n: usize) -> f64 {
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    (2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Spearman's rho between two paired samples, with a two-sided p-value.
pub fn spearman_paired(x: &[f64], y: &[f64]) -> Result<EvalReport> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "spearman needs at least 3 paired values, got {n}"
        )));
    }
    let (rx, ry) = (average_ranks(x)?, average_ranks(y)?);
    let m = moments(&rx, &ry);
    if m.sxx == 0.0 || m.syy == 0.0 {
        return Err(Error::DegenerateRanking("all values of one side are tied".into()));
    }
    let rho = (covariance_sum(&rx, &ry, &m) / (m.sxx * m.syy).sqrt()).clamp(-1.0, 1.0);
    let (p, method) = if n <= EXACT_PERMUTATION_MAX_N {
        (exact_permutation_p(&rx, &ry), PValueMethod::ExactPermutation)
    } else {
        (t_approximation_p(rho, n), PValueMethod::TApproximation)
    };
    Ok(EvalReport::new(rho, p, n, method))
}

/// Correlates predictions with gold scores over the words they share.
/// Gold words without a prediction are listed in `excluded`.
pub fn spearman(pred: &BTreeMap<String, f64>, gold: &BTreeMap<String, f64>) -> Result<EvalReport> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut excluded = Vec::new();
    for (word, &g) in gold {
        match pred.get(word) {
            Some(&p) => {
                x.push(p);
                y.push(g);
            }
            None => excluded.push(word.clone()),
        }
    }
    if !excluded.is_empty() {
        log::warn!(
            "{} gold word(s) have no prediction and are excluded: {}",
            excluded.len(),
            excluded.join(", ")
        );
    }
    let mut report = spearman_paired(&x, &y)?;
    report.excluded = excluded;
    Ok(report)
}

/// Unweighted mean rho across test sets and the number of significant ones.
pub fn aggregate_languages(reports: &[EvalReport]) -> Result<(f64, usize)> {
    if reports.is_empty() {
        return Err(Error::Empty("no reports to aggregate".into()));
    }
    let mean = reports.iter().map(|r| r.rho).sum::<f64>() / reports.len() as f64;
    let significant = reports.iter().filter(|r| r.p_value < ALPHA).count();
    Ok((mean, significant))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub n: usize,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub histogram: Histogram,
}

/// Median of finite values; the mean of the two central values for even n.
pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("median of an empty list".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Median, range and an equal-width histogram over `[min, max]`.
/// The last bin is closed; a constant list yields a single bin.
pub fn distribution_stats(scores: &[f64], n_bins: usize) -> Result<DistributionStats> {
    if scores.is_empty() {
        return Err(Error::Empty("no scores".into()));
    }
    if n_bins == 0 {
        return Err(Error::InvalidArgument("need at least one histogram bin".into()));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("scores".into()));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let histogram = if min == max {
        Histogram {
            edges: vec![min, max],
            counts: vec![scores.len()],
        }
    } else {
        let width = (max - min) / n_bins as f64;
        let mut edges: Vec<f64> = (0..n_bins).map(|i| min + width * i as f64).collect();
        edges.push(max);
        let mut counts = vec![0; n_bins];
        for &v in scores {
            let bin = (((v - min) / (max - min)) * n_bins as f64) as usize;
            counts[bin.min(n_bins - 1)] += 1;
        }
        Histogram { edges, counts }
    };
    Ok(DistributionStats {
        n: scores.len(),
        median: median(scores)?,
        min,
        max,
        histogram,
    })
}

/// Divides every score by the maximum score.
pub fn unit_normalise(scores: &[f64]) -> Result<Vec<f64>> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0 && max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "unit normalisation needs a positive finite maximum, got {max}"
        )));
    }
    Ok(scores.iter().map(|v| v / max).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianPerformance {
    pub test_set: String,
    pub gold_median: f64,
    pub performance: f64,
}

/// Rank correlation between test sets' median gold scores and a method's
/// performance on each of them.
pub fn median_performance_correlation(entries: &[MedianPerformance]) -> Result<EvalReport> {
    let medians: Vec<f64> = entries.iter().map(|e| e.gold_median).collect();
    let perf: Vec<f64> = entries.iter().map(|e| e.performance).collect();
    spearman_paired(&medians, &perf)
}
