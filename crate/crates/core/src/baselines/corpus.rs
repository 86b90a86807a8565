use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// A tokenised corpus: one sentence per line, tokens split on whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    sentences: Vec<Vec<String>>,
    token_count: usize,
}

impl Corpus {
    pub fn from_sentences(sentences: Vec<Vec<String>>) -> Self {
        let token_count = sentences.iter().map(Vec::len).sum();
        Self {
            sentences,
            token_count,
        }
    }

    /// Empty lines are kept out of the sentence list.
    pub fn parse(text: &str) -> Self {
        Self::from_sentences(
            text.lines()
                .map(|l| l.split_whitespace().map(str::to_owned).collect::<Vec<_>>())
                .filter(|s| !s.is_empty())
                .collect(),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn sentences(&self) -> &[Vec<String>] {
        &self.sentences
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn is_empty(&self) -> bool {
        self.token_count == 0
    }

    pub fn count(&self, word: &str) -> usize {
        self.sentences
            .iter()
            .flatten()
            .filter(|t| t.as_str() == word)
            .count()
    }
}
