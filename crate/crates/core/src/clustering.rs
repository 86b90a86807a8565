//! Column standardisation and Affinity Propagation clustering.
//!
//! Affinity Propagation (Frey & Dueck, 2007) exchanges two kinds of messages
//! between points over a dense similarity matrix `s(i, k) = -|x_i - x_k|^2`:
//!
//! * responsibility `r(i, k)`: how well suited `k` is as exemplar for `i`,
//!   relative to the best alternative;
//! * availability `a(i, k)`: accumulated evidence that `k` should be an
//!   exemplar, as seen from `i`.
//!
//! Points whose `a(k, k) + r(k, k) > 0` are exemplars; every other point joins
//! the exemplar it is most similar to.

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sum that depends only on the multiset of values, not their order, so
/// reordering points never changes a result in the last bit.
fn ordered_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().collect();
    v.sort_unstable_by(f64::total_cmp);
    v.into_iter().sum()
}

/// Z-scores every column with the population standard deviation.
/// Constant columns become all zeros.
pub fn standardise(m: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = m.to_owned();
    let n = m.nrows() as f64;
    for mut col in out.axis_iter_mut(Axis(1)) {
        let first = col.first().copied();
        if col.iter().all(|&v| Some(v) == first) {
            col.fill(0.0);
            continue;
        }
        let mean = ordered_sum(col.iter().copied()) / n;
        let var = ordered_sum(col.iter().map(|v| (v - mean).powi(2))) / n;
        let std = var.sqrt();
        col.mapv_inplace(|v| (v - mean) / std);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preference {
    /// Median of all off-diagonal similarities.
    MedianSimilarity,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApConfig {
    pub damping: f64,
    pub max_iterations: usize,
    pub convergence_iterations: usize,
    pub preference: Preference,
    /// Seed for tiny additive similarity noise that breaks exact ties;
    /// `None` disables the noise.
    pub tie_noise_seed: Option<u64>,
}

impl Default for ApConfig {
    fn default() -> Self {
        Self {
            damping: 0.5,
            max_iterations: 200,
            convergence_iterations: 15,
            preference: Preference::MedianSimilarity,
            tie_noise_seed: None,
        }
    }
}

impl ApConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..1.0).contains(&self.damping) {
            return Err(Error::InvalidArgument(format!(
                "damping must lie in [0.5, 1), got {}",
                self.damping
            )));
        }
        if self.convergence_iterations == 0 || self.max_iterations < self.convergence_iterations {
            return Err(Error::InvalidArgument(format!(
                "need max_iterations ({}) >= convergence_iterations ({}) >= 1",
                self.max_iterations, self.convergence_iterations
            )));
        }
        if let Preference::Value(p) = self.preference {
            if !p.is_finite() {
                return Err(Error::InvalidArgument("preference must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Result of a clustering run.
///
/// `labels[i]` is a cluster index into `exemplars`, and `exemplars[c]` is the
/// point index representing cluster `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub exemplars: Vec<usize>,
    pub converged: bool,
    /// Preference value actually used for every point.
    pub preference: f64,
    pub iterations: usize,
}

impl Clustering {
    pub fn n_clusters(&self) -> usize {
        self.exemplars.len()
    }

    fn single(n: usize, exemplar: usize, converged: bool, preference: f64, iterations: usize) -> Self {
        Self {
            labels: vec![0; n],
            exemplars: vec![exemplar],
            converged,
            preference,
            iterations,
        }
    }
}

/// Negative squared Euclidean distances between all pairs of rows.
/// The diagonal is left at zero.
pub fn similarity_matrix(points: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = points.nrows();
    let mut s = Array2::zeros((n, n));
    for i in 0..n {
        for k in i + 1..n {
            let d = neg_sq_dist(points, i, k);
            s[[i, k]] = d;
            s[[k, i]] = d;
        }
    }
    s
}

fn neg_sq_dist(points: ArrayView2<'_, f64>, i: usize, k: usize) -> f64 {
    -points
        .row(i)
        .iter()
        .zip(points.row(k))
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
}

/// Median of the off-diagonal entries; average of the two middle values
/// when their count is even. Requires at least two points.
pub fn median_offdiagonal(s: ArrayView2<'_, f64>) -> f64 {
    let n = s.nrows();
    let mut v: Vec<f64> = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for k in 0..n {
            if i != k {
                v.push(s[[i, k]]);
            }
        }
    }
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Sum of exemplar preferences plus the similarity of every other point to
/// its exemplar, the objective Affinity Propagation approximately maximises.
pub fn net_similarity(s: ArrayView2<'_, f64>, preference: f64, labels: &[usize], exemplars: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let e = exemplars[c];
            if e == i {
                preference
            } else {
                s[[i, e]]
            }
        })
        .sum()
}

/// Assigns every point to its most similar exemplar (lowest index on ties);
/// exemplars label themselves.
fn assign(points: ArrayView2<'_, f64>, exemplars: &[usize]) -> Vec<usize> {
    (0..points.nrows())
        .map(|i| {
            if let Some(c) = exemplars.iter().position(|&e| e == i) {
                return c;
            }
            let mut best = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for (c, &e) in exemplars.iter().enumerate() {
                let sim = neg_sq_dist(points, i, e);
                if sim > best_sim {
                    best = c;
                    best_sim = sim;
                }
            }
            best
        })
        .collect()
}

fn medoid(s: ArrayView2<'_, f64>) -> usize {
    let mut best = 0;
    let mut best_sum = f64::NEG_INFINITY;
    for (i, row) in s.axis_iter(Axis(0)).enumerate() {
        let sum = ordered_sum(row.iter().enumerate().filter(|&(k, _)| k != i).map(|(_, &v)| v));
        if sum > best_sum {
            best = i;
            best_sum = sum;
        }
    }
    best
}

/// Clusters the rows of `points` with Affinity Propagation.
///
/// The exemplar set found by message passing is then improved by local
/// search on the net similarity. Non-convergence is not an error: the search
/// starts from the medoid alone and `converged` is false. Exemplars located
/// at the same coordinates are merged, so identical points always share a
/// cluster.
pub fn affinity_propagation(points: ArrayView2<'_, f64>, cfg: &ApConfig) -> Result<Clustering> {
    cfg.validate()?;
    let n = points.nrows();
    if n == 0 {
        return Err(Error::Empty("affinity propagation on zero points".into()));
    }
    if n == 1 {
        let pref = match cfg.preference {
            Preference::Value(p) => p,
            Preference::MedianSimilarity => 0.0,
        };
        return Ok(Clustering::single(1, 0, true, pref, 0));
    }

    let clean = similarity_matrix(points);
    let pref = match cfg.preference {
        Preference::MedianSimilarity => median_offdiagonal(clean.view()),
        Preference::Value(p) => p,
    };

    // All pairs equally similar: messages carry no information. Either every
    // point prefers itself or none does.
    let common = clean[[0, 1]];
    let uniform = (0..n).all(|i| (0..n).all(|k| i == k || clean[[i, k]] == common));
    if uniform {
        return Ok(if pref > common {
            Clustering {
                labels: (0..n).collect(),
                exemplars: (0..n).collect(),
                converged: true,
                preference: pref,
                iterations: 0,
            }
        } else {
            Clustering::single(n, 0, true, pref, 0)
        });
    }

    let mut s = clean.clone();
    for i in 0..n {
        s[[i, i]] = pref;
    }
    if let Some(seed) = cfg.tie_noise_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in s.iter_mut() {
            *v += 1e-12 * v.abs() * rng.random_range(-1.0..1.0);
        }
    }

    let (exemplars, converged, iterations) = propagate(&s, cfg);
    let start = if !converged || exemplars.is_empty() {
        log::debug!("affinity propagation did not converge after {iterations} iterations");
        vec![medoid(clean.view())]
    } else {
        exemplars
    };
    let exemplars = polish(&s, start);

    let mut kept: Vec<usize> = Vec::with_capacity(exemplars.len());
    for e in exemplars {
        if !kept.iter().any(|&k| points.row(k) == points.row(e)) {
            kept.push(e);
        }
    }
    let labels = assign(points, &kept);
    Ok(Clustering {
        labels,
        exemplars: kept,
        converged,
        preference: pref,
        iterations,
    })
}

/// Runs the damped message updates. Returns the final exemplar set, whether
/// it stayed fixed for `convergence_iterations` consecutive rounds, and the
/// number of rounds performed.
fn propagate(s: &Array2<f64>, cfg: &ApConfig) -> (Vec<usize>, bool, usize) {
    let n = s.nrows();
    let lambda = cfg.damping;
    let mut r = Array2::<f64>::zeros((n, n));
    let mut a = Array2::<f64>::zeros((n, n));
    let mut is_exemplar = vec![false; n];
    let mut stable_rounds = 0usize;
    let mut positives: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut support = vec![0.0; n];

    for it in 1..=cfg.max_iterations {
        // responsibilities
        for i in 0..n {
            let (mut first, mut first_k, mut second) = (f64::NEG_INFINITY, 0, f64::NEG_INFINITY);
            for k in 0..n {
                let v = a[[i, k]] + s[[i, k]];
                if v > first {
                    second = first;
                    first = v;
                    first_k = k;
                } else if v > second {
                    second = v;
                }
            }
            for k in 0..n {
                let competitor = if k == first_k { second } else { first };
                let update = s[[i, k]] - competitor;
                r[[i, k]] = lambda * r[[i, k]] + (1.0 - lambda) * update;
            }
        }

        // availabilities; column sums over positive responsibilities, gathered
        // row by row. Zeros leave a sorted sum unchanged, so they are skipped.
        for b in &mut positives {
            b.clear();
        }
        for (i, row) in r.outer_iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if v > 0.0 && i != k {
                    positives[k].push(v);
                }
            }
        }
        for (k, b) in positives.iter_mut().enumerate() {
            b.sort_unstable_by(f64::total_cmp);
            support[k] = b.iter().sum();
        }
        for i in 0..n {
            for k in 0..n {
                let update = if i == k {
                    support[k]
                } else {
                    (r[[k, k]] + support[k] - r[[i, k]].max(0.0)).min(0.0)
                };
                a[[i, k]] = lambda * a[[i, k]] + (1.0 - lambda) * update;
            }
        }

        let mut changed = false;
        for (k, flag) in is_exemplar.iter_mut().enumerate() {
            let now = a[[k, k]] + r[[k, k]] > 0.0;
            changed |= now != *flag;
            *flag = now;
        }
        stable_rounds = if changed { 1 } else { stable_rounds + 1 };
        let any = is_exemplar.iter().any(|&e| e);
        if any && stable_rounds >= cfg.convergence_iterations {
            return (exemplar_indices(&is_exemplar), true, it);
        }
    }
    (exemplar_indices(&is_exemplar), false, cfg.max_iterations)
}

/// Nearest and second-nearest exemplar of one point, itself excluded.
#[derive(Clone, Copy)]
struct Nearest {
    best: f64,
    owner: usize,
    second: f64,
}

fn nearest(s: &Array2<f64>, is_exemplar: &[bool]) -> Vec<Nearest> {
    (0..s.nrows())
        .map(|i| {
            let mut n = Nearest {
                best: f64::NEG_INFINITY,
                owner: usize::MAX,
                second: f64::NEG_INFINITY,
            };
            for (k, _) in is_exemplar.iter().enumerate().filter(|&(k, &e)| e && k != i) {
                let v = s[[i, k]];
                if v > n.best {
                    n.second = n.best;
                    n.best = v;
                    n.owner = k;
                } else if v > n.second {
                    n.second = v;
                }
            }
            n
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Move {
    Add(usize),
    Remove(usize),
    Swap { out: usize, into: usize },
}

/// Local search on the net similarity starting from the exemplars found by
/// message passing: repeatedly applies the best strictly improving single
/// addition, removal or swap of an exemplar.
fn polish(s: &Array2<f64>, start: Vec<usize>) -> Vec<usize> {
    let n = s.nrows();
    let mut is_exemplar = vec![false; n];
    for e in start {
        is_exemplar[e] = true;
    }
    let mut terms: Vec<f64> = Vec::with_capacity(n);

    loop {
        let near = nearest(s, &is_exemplar);
        let exemplars = exemplar_indices(&is_exemplar);
        let contribution = |i: usize| if is_exemplar[i] { s[[i, i]] } else { near[i].best };
        let scale = ordered_sum((0..n).map(|i| contribution(i).abs())).max(1.0);
        let mut best: Option<(f64, Move)> = None;
        let mut consider = |gain: f64, mv: Move| {
            if gain > 1e-12 * scale && best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, mv));
            }
        };

        for k in (0..n).filter(|&k| !is_exemplar[k]) {
            terms.push(s[[k, k]] - near[k].best);
            for i in (0..n).filter(|&i| i != k && !is_exemplar[i]) {
                let d = s[[i, k]] - near[i].best;
                if d > 0.0 {
                    terms.push(d);
                }
            }
            consider(ordered_sum(terms.drain(..)), Move::Add(k));
        }
        if exemplars.len() > 1 {
            for &e in &exemplars {
                terms.push(near[e].best - s[[e, e]]);
                for i in (0..n).filter(|&i| !is_exemplar[i] && near[i].owner == e) {
                    terms.push(near[i].second - near[i].best);
                }
                consider(ordered_sum(terms.drain(..)), Move::Remove(e));
            }
        }
        for &e in &exemplars {
            for k in (0..n).filter(|&k| !is_exemplar[k]) {
                terms.push(s[[k, k]] - near[k].best);
                terms.push(s[[e, k]].max(near[e].best) - s[[e, e]]);
                for i in (0..n).filter(|&i| i != k && !is_exemplar[i]) {
                    let without = if near[i].owner == e { near[i].second } else { near[i].best };
                    let d = s[[i, k]].max(without) - near[i].best;
                    if d != 0.0 {
                        terms.push(d);
                    }
                }
                consider(ordered_sum(terms.drain(..)), Move::Swap { out: e, into: k });
            }
        }

        match best {
            None => return exemplars,
            Some((_, Move::Add(k))) => is_exemplar[k] = true,
            Some((_, Move::Remove(e))) => is_exemplar[e] = false,
            Some((_, Move::Swap { out, into })) => {
                is_exemplar[out] = false;
                is_exemplar[into] = true;
            }
        }
    }
}

fn exemplar_indices(flags: &[bool]) -> Vec<usize> {
    flags.iter().enumerate().filter(|(_, &e)| e).map(|(i, _)| i).collect()
}
