use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::scores::{ChangeScores, ScoreFlag, WordScore};
use crate::{Error, Result};

/// Pre-trained static word vectors.
///
/// Text format: a header line `V D`, then `V` lines of a token followed by
/// `D` decimal numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticEmbeddings {
    words: Vec<String>,
    index: HashMap<String, usize>,
    matrix: DMatrix<f64>,
}

impl StaticEmbeddings {
    pub fn new(words: Vec<String>, matrix: DMatrix<f64>) -> Result<Self> {
        if words.len() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                left: words.len(),
                right: matrix.nrows(),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("static embeddings".into()));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate word {w:?} in embeddings")));
            }
        }
        Ok(Self { words, index, matrix })
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, reason: String| Error::Parse {
            path: origin.to_owned(),
            line,
            reason,
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| err(1, "missing `V D` header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(1, format!("bad header {header:?}")))?;
        let [v, d] = dims[..] else {
            return Err(err(1, format!("bad header {header:?}")));
        };
        let mut words = Vec::with_capacity(v);
        let mut values = Vec::with_capacity(v * d);
        for (idx, line) in lines {
            let mut fields = line.split_whitespace();
            let word = fields.next().expect("non-blank line");
            let row: Vec<f64> = fields
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err(idx + 1, format!("bad number in vector for {word:?}")))?;
            if row.len() != d {
                return Err(err(idx + 1, format!("expected {d} values, found {}", row.len())));
            }
            words.push(word.to_owned());
            values.extend(row);
        }
        if words.len() != v {
            return Err(err(1, format!("header declares {v} words, file has {}", words.len())));
        }
        Self::new(words, DMatrix::from_row_slice(v, d, &values))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn vector(&self, word: &str) -> Option<DVector<f64>> {
        self.index
            .get(word)
            .map(|&i| self.matrix.row(i).transpose())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcrustesFit {
    pub rotation: DMatrix<f64>,
    /// `AᵀB` was numerically rank deficient, so the optimum is not unique.
    pub rank_deficient: bool,
}

/// Orthogonal `Q` minimising `|AQ - B|_F`, from the SVD `AᵀB = UΣVᵀ` as
/// `Q = UVᵀ`.
pub fn orthogonal_procrustes(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<ProcrustesFit> {
    if a.nrows() == 0 {
        return Err(Error::Empty("procrustes needs at least one row".into()));
    }
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            left: a.ncols(),
            right: b.ncols(),
        });
    }
    let m = a.transpose() * b;
    let svd = m.svd(true, true);
    let largest = svd.singular_values.max();
    let smallest = svd.singular_values.min();
    let rank_deficient = smallest <= 1e-10 * largest.max(f64::MIN_POSITIVE);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    Ok(ProcrustesFit {
        rotation: u * v_t,
        rank_deficient,
    })
}

/// Centres rows on `centre` and scales them to unit length; zero rows stay zero.
fn normalise_rows(m: &DMatrix<f64>, centre: &DVector<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut row in out.row_iter_mut() {
        row -= centre.transpose();
        let n = row.norm();
        if n > 0.0 {
            row /= n;
        }
    }
    out
}

fn shared_mean(e: &StaticEmbeddings, shared: &[&str]) -> DVector<f64> {
    let mut mean = DVector::zeros(e.dim());
    for w in shared {
        mean += e.vector(w).expect("shared word present");
    }
    mean / shared.len() as f64
}

/// Cosine distance between each target's vectors after aligning the first
/// space onto the second over their shared vocabulary.
///
/// Both spaces are mean-centred (on the shared words) and length-normalised
/// before alignment and scoring.
pub fn procrustes_cosine(e1: &StaticEmbeddings, e2: &StaticEmbeddings, targets: &[String]) -> Result<ChangeScores> {
    if e1.dim() != e2.dim() {
        return Err(Error::DimensionMismatch {
            left: e1.dim(),
            right: e2.dim(),
        });
    }
    let shared: Vec<&str> = e1
        .words()
        .iter()
        .map(String::as_str)
        .filter(|w| e2.index.contains_key(*w))
        .collect();
    if shared.is_empty() {
        return Err(Error::Empty("embeddings share no vocabulary".into()));
    }

    let n1 = normalise_rows(&e1.matrix, &shared_mean(e1, &shared));
    let n2 = normalise_rows(&e2.matrix, &shared_mean(e2, &shared));
    let rows = |m: &DMatrix<f64>, e: &StaticEmbeddings| {
        let idx: Vec<usize> = shared.iter().map(|w| e.index[*w]).collect();
        m.select_rows(idx.iter())
    };
    let fit = orthogonal_procrustes(&rows(&n1, e1), &rows(&n2, e2))?;
    let flag = fit.rank_deficient.then_some(ScoreFlag::RankDeficientAlignment);
    if fit.rank_deficient {
        log::warn!("procrustes alignment is rank deficient; rotation is not unique");
    }

    let mut out = ChangeScores::default();
    for target in targets {
        let scored = (|| {
            let (Some(&i1), Some(&i2)) = (e1.index.get(target), e2.index.get(target)) else {
                return Err(Error::InvalidArgument(format!(
                    "{target:?} is missing from one of the embedding vocabularies"
                )));
            };
            let aligned = n1.row(i1) * &fit.rotation;
            let other = n2.row(i2);
            let (na, nb) = (aligned.norm(), other.norm());
            if na == 0.0 || nb == 0.0 {
                return Err(Error::ZeroNorm(format!("{target:?} is at the centroid")));
            }
            let cos = (aligned.dot(&other) / (na * nb)).clamp(-1.0, 1.0);
            Ok(WordScore::new(target.clone(), 1.0 - cos).flagged(flag))
        })();
        out.push(target, scored);
    }
    Ok(out)
}
