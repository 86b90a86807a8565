//! Ranking words by lexical semantic change between two time periods.
//!
//! The crate works on *usage matrices*: one contextualised embedding per
//! occurrence of a target word in a corpus. Three change scores are provided
//! ([`metrics::prt`], [`metrics::apd`] and [`metrics::jsd_score`]), together
//! with static baselines, Spearman evaluation against gold rankings and the
//! score-distribution analyses used to compare test sets.

pub mod baselines;
pub mod bundle;
pub mod clustering;
mod error;
pub mod evaluation;
pub mod metrics;
pub mod scores;
pub mod usage;

pub use error::{Error, Result};
pub use scores::{ChangeScores, ScoreFlag, WordScore};
pub use usage::{LayerStrategy, Period, UsageMatrix, UsageTensor};
