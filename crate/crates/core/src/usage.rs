//! Usage tensors, usage matrices and the layer reduction between them.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Period {
    T1,
    T2,
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::T1 => f.write_str("t1"),
            Period::T2 => f.write_str("t2"),
        }
    }
}

/// All layered embeddings of one word in one period.
///
/// Values are stored exactly as extracted (`f32`), occurrence-major, then
/// layer, then dimension. Layer `layers - 1` is the top layer.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageTensor {
    word: String,
    period: Period,
    occurrences: usize,
    layers: usize,
    dim: usize,
    data: Vec<f32>,
}

impl UsageTensor {
    pub fn new(
        word: impl Into<String>,
        period: Period,
        occurrences: usize,
        layers: usize,
        dim: usize,
        data: Vec<f32>,
    ) -> Result<Self> {
        let word = word.into();
        if layers == 0 || dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "usage tensor for {word:?} needs layers >= 1 and dim >= 1 (got {layers}, {dim})"
            )));
        }
        let expected = occurrences * layers * dim;
        if data.len() != expected {
            return Err(Error::SizeMismatch {
                what: format!("usage tensor {word:?} ({period})"),
                expected: (expected * 4) as u64,
                found: (data.len() * 4) as u64,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "usage tensor {word:?} ({period}) at flat index {pos}"
            )));
        }
        Ok(Self {
            word,
            period,
            occurrences,
            layers,
            dim,
            data,
        })
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn occurrences(&self) -> usize {
        self.occurrences
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Embedding of occurrence `occ` at layer `layer`.
    pub fn vector(&self, occ: usize, layer: usize) -> &[f32] {
        let start = (occ * self.layers + layer) * self.dim;
        &self.data[start..start + self.dim]
    }
}

/// One embedding per occurrence (rows) for a word in one period.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageMatrix {
    word: String,
    period: Period,
    data: Array2<f64>,
}

impl UsageMatrix {
    pub fn new(word: impl Into<String>, period: Period, data: Array2<f64>) -> Self {
        Self {
            word: word.into(),
            period,
            data,
        }
    }

    /// Builds a matrix from row vectors; all rows must share one length.
    pub fn from_rows(word: impl Into<String>, period: Period, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: bad.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let data = Array2::from_shape_vec((rows.len(), dim), flat)
            .expect("row lengths checked above");
        Ok(Self::new(word, period, data))
    }

    pub fn word(&self) -> &str {
        &self.word
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.data.row(i)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.data
    }
}

/// How a multi-layer tensor is reduced to a single embedding per occurrence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerStrategy {
    TopLayer,
    AverageAll,
    AverageTop4,
}

impl LayerStrategy {
    fn layer_range(self, layers: usize) -> Result<std::ops::Range<usize>> {
        match self {
            LayerStrategy::TopLayer => Ok(layers - 1..layers),
            LayerStrategy::AverageAll => Ok(0..layers),
            LayerStrategy::AverageTop4 if layers >= 4 => Ok(layers - 4..layers),
            LayerStrategy::AverageTop4 => Err(Error::InvalidArgument(format!(
                "average-top4 needs at least 4 layers, tensor has {layers}"
            ))),
        }
    }
}

impl fmt::Display for LayerStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LayerStrategy::TopLayer => "top",
            LayerStrategy::AverageAll => "all",
            LayerStrategy::AverageTop4 => "top4",
        })
    }
}

impl FromStr for LayerStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "top" | "top-layer" => Ok(LayerStrategy::TopLayer),
            "all" | "average-all" => Ok(LayerStrategy::AverageAll),
            "top4" | "average-top4" => Ok(LayerStrategy::AverageTop4),
            other => Err(Error::InvalidArgument(format!(
                "unknown layer strategy {other:?} (expected top, all or top4)"
            ))),
        }
    }
}

/// Reduces every occurrence's layer stack to one vector.
pub fn aggregate_layers(tensor: &UsageTensor, strategy: LayerStrategy) -> Result<UsageMatrix> {
    let range = strategy.layer_range(tensor.layers())?;
    let count = range.len() as f64;
    let (n, dim) = (tensor.occurrences(), tensor.dim());
    let mut out = Array2::<f64>::zeros((n, dim));
    for (occ, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        for layer in range.clone() {
            for (acc, &v) in row.iter_mut().zip(tensor.vector(occ, layer)) {
                *acc += f64::from(v);
            }
        }
        if count > 1.0 {
            row.mapv_inplace(|v| v / count);
        }
    }
    Ok(UsageMatrix::new(tensor.word(), tensor.period(), out))
}

/// Caps the number of rows at `cap` by uniform sampling without replacement.
///
/// Sampling is driven by ChaCha8 seeded with `seed` through
/// `rand::seq::index::sample`; the selected rows keep their original order.
/// Matrices with at most `cap` rows are returned unchanged.
pub fn subsample(matrix: &UsageMatrix, cap: usize, seed: u64) -> Result<UsageMatrix> {
    if cap == 0 {
        return Err(Error::InvalidArgument("subsample cap must be >= 1".into()));
    }
    let n = matrix.rows();
    if n <= cap {
        return Ok(matrix.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, cap).into_vec();
    picked.sort_unstable();
    let data = matrix.view().select(Axis(0), &picked);
    Ok(UsageMatrix::new(matrix.word(), matrix.period(), data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tensor(n: usize, l: usize, d: usize, f: impl Fn(usize, usize, usize) -> f32) -> UsageTensor {
        let mut data = Vec::with_capacity(n * l * d);
        for occ in 0..n {
            for layer in 0..l {
                for k in 0..d {
                    data.push(f(occ, layer, k));
                }
            }
        }
        UsageTensor::new("w", Period::T1, n, l, d, data).unwrap()
    }

    #[test]
    fn single_layer_top_is_identity() {
        let t = tensor(3, 1, 2, |o, _, k| (o * 2 + k) as f32);
        let m = aggregate_layers(&t, LayerStrategy::TopLayer).unwrap();
        assert_eq!(m.view(), ndarray::arr2(&[[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]]));
    }

    #[test]
    fn average_all_of_two_basis_layers() {
        let t = UsageTensor::new("w", Period::T2, 1, 2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let m = aggregate_layers(&t, LayerStrategy::AverageAll).unwrap();
        assert_eq!(m.row(0).to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn average_top4_of_twelve_layers() {
        // layers 9..=12 (1-based) are 1, 1, 1, 2 -> 1.25
        let t = tensor(2, 12, 3, |_, l, _| if l == 11 { 2.0 } else { 1.0 });
        let m = aggregate_layers(&t, LayerStrategy::AverageTop4).unwrap();
        assert!(m.view().iter().all(|&v| v == 1.25));
    }

    #[test]
    fn top_layer_is_last_layer() {
        let t = tensor(2, 3, 2, |o, l, _| (10 * o + l) as f32);
        let m = aggregate_layers(&t, LayerStrategy::TopLayer).unwrap();
        assert_eq!(m.view(), ndarray::arr2(&[[2.0, 2.0], [12.0, 12.0]]));
    }

    #[test]
    fn average_top4_needs_four_layers() {
        let t = tensor(1, 3, 2, |_, _, _| 1.0);
        assert!(aggregate_layers(&t, LayerStrategy::AverageTop4).is_err());
    }

    #[test]
    fn tensor_rejects_bad_length_and_nan() {
        assert!(matches!(
            UsageTensor::new("w", Period::T1, 2, 1, 2, vec![0.0; 3]),
            Err(Error::SizeMismatch { .. })
        ));
        assert!(matches!(
            UsageTensor::new("w", Period::T1, 1, 1, 2, vec![0.0, f32::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(UsageTensor::new("w", Period::T1, 0, 1, 2, vec![]).is_ok());
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("top".parse::<LayerStrategy>().unwrap(), LayerStrategy::TopLayer);
        assert_eq!("all".parse::<LayerStrategy>().unwrap(), LayerStrategy::AverageAll);
        assert_eq!("top4".parse::<LayerStrategy>().unwrap(), LayerStrategy::AverageTop4);
        assert!("bottom".parse::<LayerStrategy>().is_err());
    }

    fn big_matrix(n: usize) -> UsageMatrix {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64, -(i as f64)]).collect();
        UsageMatrix::from_rows("w", Period::T1, &rows).unwrap()
    }

    #[test]
    fn subsample_below_cap_is_noop() {
        let m = big_matrix(10);
        assert_eq!(subsample(&m, 100, 7).unwrap(), m);
    }

    #[test]
    fn subsample_is_deterministic() {
        let m = big_matrix(1000);
        let a = subsample(&m, 100, 42).unwrap();
        let b = subsample(&m, 100, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows(), 100);
    }

    #[test]
    fn subsample_rows_come_from_input() {
        let m = big_matrix(1000);
        let a = subsample(&m, 100, 1).unwrap();
        let b = subsample(&m, 100, 2).unwrap();
        assert_ne!(a, b);
        for s in [&a, &b] {
            assert_eq!(s.rows(), 100);
            let mut seen = std::collections::HashSet::new();
            for row in s.view().rows() {
                let idx = row[0] as usize;
                assert_eq!(row[1], -(idx as f64));
                assert!(idx < 1000 && seen.insert(idx));
            }
        }
    }

    #[test]
    fn subsample_rejects_zero_cap() {
        assert!(subsample(&big_matrix(3), 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn equal_layers_average_to_that_layer(
            n in 1usize..5, l in 1usize..6, d in 1usize..4,
            vals in proptest::collection::vec(-10.0f32..10.0, 20),
        ) {
            let t = tensor(n, l, d, |o, _, k| vals[(o * d + k) % vals.len()]);
            let m = aggregate_layers(&t, LayerStrategy::AverageAll).unwrap();
            for o in 0..n {
                for k in 0..d {
                    let expected = f64::from(vals[(o * d + k) % vals.len()]);
                    prop_assert!((m.view()[[o, k]] - expected).abs() <= 1e-5 * expected.abs().max(1.0));
                }
            }
        }

        #[test]
        fn aggregation_is_rowwise(
            n in 1usize..6, seed in any::<u64>(), shift in 0usize..6,
        ) {
            let t = tensor(n, 5, 3, |o, l, k| ((o * 31 + l * 7 + k) as u64 ^ seed) as f32 % 17.0);
            let perm: Vec<usize> = (0..n).map(|i| (i + shift) % n).collect();
            let mut permuted = Vec::new();
            for &o in &perm {
                for l in 0..5 {
                    permuted.extend_from_slice(t.vector(o, l));
                }
            }
            let tp = UsageTensor::new("w", Period::T1, n, 5, 3, permuted).unwrap();
            for s in [LayerStrategy::TopLayer, LayerStrategy::AverageAll, LayerStrategy::AverageTop4] {
                let m = aggregate_layers(&t, s).unwrap();
                let mp = aggregate_layers(&tp, s).unwrap();
                for (i, &o) in perm.iter().enumerate() {
                    prop_assert_eq!(mp.row(i), m.row(o));
                }
            }
        }

        #[test]
        fn subsample_row_count(n in 0usize..300, cap in 1usize..200, seed in any::<u64>()) {
            let m = big_matrix(n);
            prop_assert_eq!(subsample(&m, cap, seed).unwrap().rows(), n.min(cap));
        }
    }
}
