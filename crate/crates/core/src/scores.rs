//! Per-word change scores and their TSV representation (`word<TAB>score`).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Prt,
    Apd,
    Jsd,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Prt => "prt",
            Metric::Apd => "apd",
            Metric::Jsd => "jsd",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prt" => Ok(Metric::Prt),
            "apd" => Ok(Metric::Apd),
            "jsd" => Ok(Metric::Jsd),
            other => Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

/// Conditions under which a score was produced but deserves a second look.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreFlag {
    /// Prototype similarity was at or below the inversion floor.
    ClampedSimilarity,
    /// Affinity propagation did not converge; all usages were put in one cluster.
    ClusteringNotConverged,
    /// The alignment problem had no unique orthogonal solution.
    RankDeficientAlignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordScore {
    pub word: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<ScoreFlag>,
}

impl WordScore {
    pub fn new(word: impl Into<String>, value: f64) -> Self {
        Self {
            word: word.into(),
            value,
            flag: None,
        }
    }

    pub fn flagged(mut self, flag: Option<ScoreFlag>) -> Self {
        self.flag = flag;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordFailure {
    pub word: String,
    pub reason: String,
}

/// Scores for a set of target words plus the words that could not be scored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChangeScores {
    pub scores: Vec<WordScore>,
    pub failures: Vec<WordFailure>,
}

impl ChangeScores {
    pub fn push(&mut self, word: &str, outcome: Result<WordScore>) {
        match outcome {
            Ok(s) => self.scores.push(s),
            Err(e) => self.failures.push(WordFailure {
                word: word.to_owned(),
                reason: e.to_string(),
            }),
        }
    }

    /// Highest score first; equal scores ordered by word.
    pub fn ranked(&self) -> Vec<&WordScore> {
        let mut v: Vec<&WordScore> = self.scores.iter().collect();
        v.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| a.word.cmp(&b.word)));
        v
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        self.scores.iter().map(|s| (s.word.clone(), s.value)).collect()
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        self.scores.iter().find(|s| s.word == word).map(|s| s.value)
    }

    /// Renders the ranked scores as TSV with 17 significant digits.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for s in self.ranked() {
            out.push_str(&format_score_line(&s.word, s.value));
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_tsv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

pub fn format_score_line(word: &str, value: f64) -> String {
    format!("{word}\t{value:.16e}\n")
}

/// Parses `word<TAB>score` lines. Blank lines are skipped; duplicate words
/// and malformed lines are errors carrying the 1-based line number.
pub fn parse_score_tsv(text: &str, origin: &Path) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.trim().is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse {
            path: origin.to_owned(),
            line,
            reason,
        };
        let mut fields = raw.split('\t');
        let (Some(word), Some(value), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err(format!("expected `word<TAB>score`, got {raw:?}")));
        };
        if word.is_empty() {
            return Err(err("empty word".into()));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| err(format!("invalid score {value:?}")))?;
        if !value.is_finite() {
            return Err(err(format!("non-finite score {value}")));
        }
        if out.insert(word.to_owned(), value).is_some() {
            return Err(err(format!("duplicate word {word:?}")));
        }
    }
    Ok(out)
}

pub fn read_score_tsv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_score_tsv(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ranked_descending_with_word_tiebreak() {
        let mut s = ChangeScores::default();
        s.push("b", Ok(WordScore::new("b", 0.5)));
        s.push("a", Ok(WordScore::new("a", 0.5)));
        s.push("c", Ok(WordScore::new("c", 0.9)));
        s.push("d", Err(Error::Empty("x".into())));
        let words: Vec<_> = s.ranked().iter().map(|w| w.word.as_str()).collect();
        assert_eq!(words, ["c", "a", "b"]);
        assert_eq!(s.failures.len(), 1);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_score_tsv("a\t0.1\nword;0.3\n", Path::new("p.tsv")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_nan() {
        assert!(parse_score_tsv("a\t1\na\t2\n", Path::new("p")).is_err());
        assert!(parse_score_tsv("a\tNaN\n", Path::new("p")).is_err());
        assert_eq!(parse_score_tsv("\n a\t2\r\n\n", Path::new("p")).unwrap()[" a"], 2.0);
    }

    proptest! {
        #[test]
        fn tsv_round_trip_is_exact(values in proptest::collection::vec(-1e6f64..1e6, 1..20)) {
            let mut s = ChangeScores::default();
            for (i, v) in values.iter().enumerate() {
                s.push("", Ok(WordScore::new(format!("w{i}"), *v)));
            }
            let back = parse_score_tsv(&s.to_tsv(), Path::new("mem")).unwrap();
            prop_assert_eq!(back, s.to_map());
        }
    }
}
