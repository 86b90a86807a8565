//! `lscd evaluate`: Spearman correlation of predictions against gold scores.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use lscd_core::evaluation::{self, EvalReport, PValueMethod};
use lscd_core::scores::read_score_tsv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Tsv,
    Json,
}

fn method_name(m: PValueMethod) -> &'static str {
    match m {
        PValueMethod::ExactPermutation => "exact-permutation",
        PValueMethod::TApproximation => "t-approximation",
    }
}

pub fn render(report: &EvalReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Tsv => {
            let mut out = String::from("rho\tp_value\tn\tsignificant\tmethod\n");
            writeln!(
                out,
                "{:.16e}\t{:.16e}\t{}\t{}\t{}",
                report.rho,
                report.p_value,
                report.n,
                report.significant,
                method_name(report.method)
            )?;
            out
        }
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            s
        }
    })
}

pub fn evaluate_files(pred: &Path, gold: &Path) -> Result<EvalReport> {
    let p = read_score_tsv(pred)?;
    let g = read_score_tsv(gold)?;
    evaluation::spearman(&p, &g).with_context(|| format!("evaluating {} against {}", pred.display(), gold.display()))
}

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub pred: PathBuf,
    pub gold: PathBuf,
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
}

/// Returns the rendered report, also written to `output` when given.
pub fn run(args: &EvaluateArgs) -> Result<String> {
    let report = evaluate_files(&args.pred, &args.gold)?;
    let text = render(&report, args.format)?;
    if let Some(out) = &args.output {
        crate::write_file(out, &text)?;
    }
    Ok(text)
}
