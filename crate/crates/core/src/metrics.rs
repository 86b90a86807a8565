//! Change scores computed from a pair of usage matrices.
//!
//! * PRT: inverse cosine similarity between the period prototypes (mean
//!   usage vectors).
//! * APD: mean cosine distance over all cross-period usage pairs.
//! * JSD: Jensen-Shannon divergence between the periods' distributions over
//!   usage clusters found by Affinity Propagation.
//!
//! Higher values mean more change for all three.

use ndarray::{concatenate, Array1, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::clustering::{affinity_propagation, standardise, ApConfig};
use crate::scores::{Metric, ScoreFlag};
use crate::usage::UsageMatrix;
use crate::{Error, Result};

/// Similarity floor applied before inversion in PRT.
pub const PRT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrtVariant {
    /// `1 / max(s, 1e-9)`.
    #[default]
    InvertedSimilarity,
    /// `1 - s`.
    CosineDistance,
}

impl std::str::FromStr for PrtVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverted" | "inverted-similarity" => Ok(PrtVariant::InvertedSimilarity),
            "distance" | "cosine-distance" => Ok(PrtVariant::CosineDistance),
            other => Err(Error::InvalidArgument(format!("unknown PRT variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeScore {
    pub word: String,
    pub metric: Metric,
    pub value: f64,
    pub flag: Option<ScoreFlag>,
}

impl ChangeScore {
    fn new(word: &str, metric: Metric, value: f64) -> Self {
        Self {
            word: word.to_owned(),
            metric,
            value,
            flag: None,
        }
    }
}

impl From<ChangeScore> for crate::WordScore {
    fn from(s: ChangeScore) -> Self {
        crate::WordScore::new(s.word, s.value).flagged(s.flag)
    }
}

fn norm(x: ArrayView1<'_, f64>) -> f64 {
    x.dot(&x).sqrt()
}

pub fn cosine_similarity(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::ZeroNorm("cosine similarity of a zero vector".into()));
    }
    Ok((x.dot(&y) / (nx * ny)).clamp(-1.0, 1.0))
}

/// Mean of the usage vectors.
pub fn prototype(u: &UsageMatrix) -> Result<Array1<f64>> {
    u.view()
        .mean_axis(Axis(0))
        .filter(|_| !u.is_empty())
        .ok_or_else(|| Error::Empty(format!("no usages of {:?} in {}", u.word(), u.period())))
}

fn check_pair(u1: &UsageMatrix, u2: &UsageMatrix) -> Result<()> {
    for u in [u1, u2] {
        if u.is_empty() {
            return Err(Error::Empty(format!("no usages of {:?} in {}", u.word(), u.period())));
        }
    }
    if u1.dim() != u2.dim() {
        return Err(Error::DimensionMismatch {
            left: u1.dim(),
            right: u2.dim(),
        });
    }
    Ok(())
}

pub fn prt(u1: &UsageMatrix, u2: &UsageMatrix, variant: PrtVariant) -> Result<ChangeScore> {
    check_pair(u1, u2)?;
    let (p1, p2) = (prototype(u1)?, prototype(u2)?);
    let s = cosine_similarity(p1.view(), p2.view())
        .map_err(|_| Error::ZeroNorm(format!("prototype of {:?} has zero norm", u1.word())))?;
    let mut score = ChangeScore::new(u1.word(), Metric::Prt, 0.0);
    score.value = match variant {
        PrtVariant::InvertedSimilarity => {
            if s <= PRT_EPSILON {
                score.flag = Some(ScoreFlag::ClampedSimilarity);
            }
            1.0 / s.max(PRT_EPSILON)
        }
        PrtVariant::CosineDistance => 1.0 - s,
    };
    Ok(score)
}

fn unit_rows(u: &UsageMatrix) -> Result<Vec<Array1<f64>>> {
    u.view()
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let n = norm(row);
            if n == 0.0 {
                Err(Error::ZeroNorm(format!(
                    "usage {i} of {:?} in {} is a zero vector",
                    u.word(),
                    u.period()
                )))
            } else {
                Ok(row.mapv(|v| v / n))
            }
        })
        .collect()
}

pub fn apd(u1: &UsageMatrix, u2: &UsageMatrix) -> Result<ChangeScore> {
    check_pair(u1, u2)?;
    let (a, b) = (unit_rows(u1)?, unit_rows(u2)?);
    let mut total = 0.0;
    for x in &a {
        for y in &b {
            total += (1.0 - x.dot(y)).clamp(0.0, 2.0);
        }
    }
    let value = total / (a.len() * b.len()) as f64;
    Ok(ChangeScore::new(u1.word(), Metric::Apd, value))
}

/// A probability distribution over usage clusters for one period.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDistribution(pub Vec<f64>);

impl ClusterDistribution {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Normalised per-cluster usage counts. The first `n1` labels belong to the
/// first period, the next `n2` to the second.
pub fn usage_distributions(
    labels: &[usize],
    n1: usize,
    n2: usize,
) -> Result<(ClusterDistribution, ClusterDistribution)> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::Empty(format!(
            "cluster distributions need usages in both periods (got {n1} and {n2})"
        )));
    }
    if labels.len() != n1 + n2 {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {n1} + {n2} usages",
            labels.len()
        )));
    }
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let histogram = |part: &[usize]| {
        let mut counts = vec![0.0; k];
        for &l in part {
            counts[l] += 1.0;
        }
        let total = part.len() as f64;
        ClusterDistribution(counts.into_iter().map(|c| c / total).collect())
    };
    Ok((histogram(&labels[..n1]), histogram(&labels[n1..])))
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
fn entropy_bits(p: impl IntoIterator<Item = f64>) -> f64 {
    -p.into_iter()
        .filter(|&v| v > 0.0)
        .map(|v| v * v.log2())
        .sum::<f64>()
}

/// `H((p + q) / 2) - (H(p) + H(q)) / 2` in bits, so the result lies in [0, 1].
pub fn jensen_shannon(p: &ClusterDistribution, q: &ClusterDistribution) -> Result<f64> {
    let (p, q) = (p.as_slice(), q.as_slice());
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    for d in [p, q] {
        let total: f64 = d.iter().sum();
        if (total - 1.0).abs() > 1e-9 || d.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidArgument(format!(
                "not a probability distribution (sums to {total})"
            )));
        }
    }
    let mixture = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b));
    let jsd = entropy_bits(mixture) - 0.5 * (entropy_bits(p.iter().copied()) + entropy_bits(q.iter().copied()));
    Ok(jsd.clamp(0.0, 1.0))
}

/// Clusters the standardised union of both periods' usages and compares the
/// periods' cluster distributions.
pub fn jsd_score(u1: &UsageMatrix, u2: &UsageMatrix, cfg: &ApConfig) -> Result<ChangeScore> {
    check_pair(u1, u2)?;
    let joint = concatenate![Axis(0), u1.view(), u2.view()];
    let clustering = affinity_propagation(standardise(joint.view()).view(), cfg)?;
    let (p, q) = usage_distributions(&clustering.labels, u1.rows(), u2.rows())?;
    let mut score = ChangeScore::new(u1.word(), Metric::Jsd, jensen_shannon(&p, &q)?);
    if !clustering.converged {
        score.flag = Some(ScoreFlag::ClusteringNotConverged);
    }
    Ok(score)
}
