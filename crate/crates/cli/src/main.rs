use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use lscd_cli::analyze;
use lscd_cli::baseline::{self, BaselineConfig};
use lscd_cli::evaluate::{self, EvaluateArgs, ReportFormat};
use lscd_cli::score::{self, RunConfig};
use lscd_core::baselines::DEFAULT_WINDOW;
use lscd_core::clustering::{ApConfig, Preference};
use lscd_core::metrics::PrtVariant;
use lscd_core::scores::Metric;
use lscd_core::LayerStrategy;

/// Lexical semantic change detection from contextual usage embeddings.
#[derive(Parser)]
#[command(name = "lscd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every target bundle and rank words by change.
    Score(ScoreArgs),
    /// Spearman correlation between predicted and gold scores.
    Evaluate(EvalCmd),
    /// Run a non-contextual baseline.
    #[command(subcommand)]
    Baseline(BaselineCmd),
    /// Score distribution analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
}

#[derive(Args)]
struct ScoreArgs {
    /// Directory holding one bundle per target word.
    #[arg(long)]
    bundles_dir: PathBuf,
    /// Score only the words listed here (one per line).
    #[arg(long)]
    targets: Option<PathBuf>,
    /// prt, apd or jsd.
    #[arg(long)]
    metric: Metric,
    /// inverted (1/cos) or distance (1 - cos); PRT only.
    #[arg(long, default_value = "inverted")]
    prt_variant: PrtVariant,
    /// top, all or top4.
    #[arg(long, default_value = "top")]
    layer: LayerStrategy,
    /// Cap on occurrences per period.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    subsample_cap: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    damping: f64,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long, default_value_t = 15)]
    convergence_iterations: usize,
    /// Fixed preference; the median similarity when omitted.
    #[arg(long, allow_hyphen_values = true)]
    preference: Option<f64>,
    /// Seed for tiny noise that breaks similarity ties.
    #[arg(long)]
    tie_noise_seed: Option<u64>,
    #[arg(long, env = "LSCD_WORKERS")]
    workers: Option<usize>,
}

#[derive(Args)]
struct EvalCmd {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Tsv)]
    format: ReportFormat,
}

#[derive(Subcommand)]
enum BaselineCmd {
    /// Absolute difference of relative frequencies.
    Fd {
        #[arg(long)]
        corpus1: PathBuf,
        #[arg(long)]
        corpus2: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Cosine distance of co-occurrence count vectors.
    Count {
        #[arg(long)]
        corpus1: PathBuf,
        #[arg(long)]
        corpus2: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
    },
    /// Cosine distance after orthogonal alignment of static embeddings.
    Procrustes {
        #[arg(long)]
        embeddings1: PathBuf,
        #[arg(long)]
        embeddings2: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Per-file median and histogram as CSV.
    Distributions {
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Divide scores by their maximum first.
        #[arg(long)]
        unit_normalise: bool,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Spearman between test-set gold medians and performance.
    MedianPerformance {
        /// Lines of `name<TAB>gold file or median<TAB>performance`.
        #[arg(long)]
        entries: PathBuf,
        #[arg(long)]
        unit_normalise: bool,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        format: ReportFormat,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ScoreArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            bundles_dir: self.bundles_dir,
            targets: self.targets,
            metric: self.metric,
            prt_variant: self.prt_variant,
            layer: self.layer,
            subsample_cap: self.subsample_cap.map(|c| c as usize),
            seed: self.seed,
            output: self.output,
            clustering: ApConfig {
                damping: self.damping,
                max_iterations: self.max_iterations,
                convergence_iterations: self.convergence_iterations,
                preference: self.preference.map_or(Preference::MedianSimilarity, Preference::Value),
                tie_noise_seed: self.tie_noise_seed,
            },
            workers: self.workers.unwrap_or_else(default_workers),
        }
    }
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<()> {
    match output {
        Some(path) => lscd_cli::write_file(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn report_failures(failed: usize, total: usize) -> ExitCode {
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: {failed} of {total} words failed");
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Score(args) => {
            let cfg = args.into_config();
            let out = score::run(&cfg)?;
            let failed = out.scores.failures.len();
            Ok(report_failures(failed, failed + out.scores.scores.len()))
        }
        Command::Evaluate(args) => {
            let text = evaluate::run(&EvaluateArgs {
                pred: args.pred,
                gold: args.gold,
                output: args.output,
                format: args.format,
            })?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Baseline(cmd) => {
            let cfg = match cmd {
                BaselineCmd::Fd { corpus1, corpus2, targets, output } => BaselineConfig::Fd {
                    corpus1,
                    corpus2,
                    targets,
                    output,
                },
                BaselineCmd::Count { corpus1, corpus2, targets, output, window } => BaselineConfig::Count {
                    corpus1,
                    corpus2,
                    targets,
                    output,
                    window,
                },
                BaselineCmd::Procrustes { embeddings1, embeddings2, targets, output } => BaselineConfig::Procrustes {
                    embeddings1,
                    embeddings2,
                    targets,
                    output,
                },
            };
            let scores = baseline::run(&cfg)?;
            let failed = scores.failures.len();
            Ok(report_failures(failed, failed + scores.scores.len()))
        }
        Command::Analyze(AnalyzeCmd::Distributions { bins, unit_normalise, output, files }) => {
            let csv = analyze::distributions_csv(&files, bins, unit_normalise)?;
            emit(&csv, output.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze(AnalyzeCmd::MedianPerformance { entries, unit_normalise, output, format }) => {
            let report = analyze::median_performance(&entries, unit_normalise)?;
            let text = evaluate::render(&report, format)?;
            print!("{text}");
            if let Some(path) = output {
                emit(&text, Some(&path))?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
