//! `lscd analyze`: score distributions and the median/performance relation.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lscd_core::evaluation::{self, DistributionStats, EvalReport, MedianPerformance};
use lscd_core::scores::read_score_tsv;

fn load_values(path: &Path, unit: bool) -> Result<Vec<f64>> {
    let values: Vec<f64> = read_score_tsv(path)?.into_values().collect();
    if unit {
        Ok(evaluation::unit_normalise(&values).with_context(|| format!("normalising {}", path.display()))?)
    } else {
        Ok(values)
    }
}

pub fn file_stats(path: &Path, bins: usize, unit: bool) -> Result<DistributionStats> {
    let values = load_values(path, unit)?;
    evaluation::distribution_stats(&values, bins).with_context(|| format!("summarising {}", path.display()))
}

pub const DISTRIBUTION_HEADER: &str = "file,n,median,min,max,bin,bin_start,bin_end,count";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// One CSV row per histogram bin, repeating the per-file summary columns.
pub fn distributions_csv(files: &[PathBuf], bins: usize, unit: bool) -> Result<String> {
    if files.is_empty() {
        bail!("no score files given");
    }
    let mut out = format!("{DISTRIBUTION_HEADER}\n");
    for path in files {
        let s = file_stats(path, bins, unit)?;
        let name = csv_field(&path.display().to_string());
        for (i, count) in s.histogram.counts.iter().enumerate() {
            writeln!(
                out,
                "{name},{},{:.16e},{:.16e},{:.16e},{i},{:.16e},{:.16e},{count}",
                s.n,
                s.median,
                s.min,
                s.max,
                s.histogram.edges[i],
                s.histogram.edges[i + 1]
            )?;
        }
    }
    Ok(out)
}

/// Reads `name<TAB>source<TAB>performance` lines. `source` is either a
/// number (the median itself) or a gold score file, resolved relative to the
/// entries file.
pub fn read_entries(path: &Path, unit: bool) -> Result<Vec<MedianPerformance>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let at = || format!("{}:{}", path.display(), i + 1);
        let fields: Vec<&str> = line.split('\t').collect();
        let [name, source, perf] = fields[..] else {
            bail!("{}: expected 3 tab-separated fields, found {}", at(), fields.len());
        };
        let performance: f64 = perf.trim().parse().with_context(|| format!("{}: bad performance {perf:?}", at()))?;
        let gold_median = match source.trim().parse::<f64>() {
            Ok(m) => m,
            Err(_) => {
                let values = load_values(&base.join(source.trim()), unit)?;
                evaluation::median(&values)?
            }
        };
        if !gold_median.is_finite() || !performance.is_finite() {
            bail!("{}: non-finite value", at());
        }
        entries.push(MedianPerformance {
            test_set: name.to_owned(),
            gold_median,
            performance,
        });
    }
    Ok(entries)
}

pub fn median_performance(entries_file: &Path, unit: bool) -> Result<EvalReport> {
    let entries = read_entries(entries_file, unit)?;
    Ok(evaluation::median_performance_correlation(&entries)?)
}
