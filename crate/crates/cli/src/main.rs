//! `cochange` — change recommendation experiments over Git histories.

mod commands;
mod config;
mod metadata;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cochange::recommend::Collector;
use cochange::BranchHandlingStrategy as S;

/// Invalid invocation: bad flag combination, malformed config and the like.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "cochange", version, about = "Evolutionary-coupling change recommendation with configurable branch handling")]
pub struct Cli {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides $COCHANGE_OUTPUT_DIR and the config file).
    #[arg(long = "out", global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct SnapshotArg {
    /// Snapshot file produced by `ingest`.
    #[arg(long, value_name = "PATH")]
    snapshot: PathBuf,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ExperimentArgs {
    /// Strategy pair, `full,fp-no-merge` or `full,fp-merge`.
    #[arg(long, value_parser = parse_pair)]
    pair: Option<(S, S)>,
    /// Cut both recommendation lists to the shorter one.
    #[arg(long, value_parser = parse_on_off, value_name = "on|off")]
    fairness: Option<bool>,
    /// Commit collector, `sequential` or `per-file`.
    #[arg(long, value_parser = parse_collector)]
    collector: Option<Collector>,
    /// Allow collector/fairness settings that differ from the pair's profile.
    #[arg(long)]
    unsafe_override: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract a history snapshot from a local Git repository.
    Ingest {
        /// Local Git repository (a working tree or a bare repository)
        #[arg(long, value_name = "PATH")]
        repo: PathBuf,
        /// History root; any revision Git can resolve
        #[arg(long = "ref", default_value = "HEAD")]
        head_ref: String,
        /// Repository label stored in the snapshot (default: directory name).
        #[arg(long)]
        label: Option<String>,
        /// Snapshot file (default: OUT/snapshot.jsonl).
        #[arg(long, value_name = "PATH")]
        snapshot_out: Option<PathBuf>,
    },
    /// Parse and validate a snapshot, printing its shape.
    SnapshotValidate {
        #[command(flatten)]
        snapshot: SnapshotArg,
    },
    /// Recommend files likely to change together with the given ones.
    Recommend {
        #[command(flatten)]
        snapshot: SnapshotArg,
        /// Comma-separated query files.
        #[arg(long, value_delimiter = ',', required = true)]
        files: Vec<String>,
        /// Cut history just before this commit (default: after head).
        #[arg(long, value_name = "COMMIT")]
        at: Option<String>,
        /// Branch handling: `full`, `fp-no-merge` or `fp-merge`
        #[arg(long, value_parser = parse_strategy, default_value = "full")]
        strategy: S,
        /// Commit collector, `sequential` or `per-file`
        #[arg(long, value_parser = parse_collector)]
        collector: Option<Collector>,
        /// Allow a collector that differs from the configured profile
        #[arg(long)]
        unsafe_override: bool,
    },
    /// Run the paired leave-one-out evaluation.
    Evaluate {
        #[command(flatten)]
        snapshot: SnapshotArg,
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Repository set the summary belongs to, for pooled reports.
        #[arg(long)]
        repo_set: Option<String>,
    },
    /// Relate branch length and merge size to paired verdicts.
    AnalyzeBranches {
        #[command(flatten)]
        snapshot: SnapshotArg,
        #[command(flatten)]
        experiment: ExperimentArgs,
        /// Equal-frequency bins for the single-cause cohort.
        #[arg(long)]
        bins: Option<usize>,
        /// Lower bound on causing merges for the multi-cause cohort.
        #[arg(long)]
        many_causes: Option<usize>,
        /// Keep only cases whose first-parent collection has at most N commits.
        #[arg(long, value_name = "N", conflicts_with = "cap_median")]
        cap: Option<usize>,
        /// Use the median first-parent collection size as the cap.
        #[arg(long)]
        cap_median: bool,
    },
    /// Co-change precision of merges and their branches against the future.
    AnalyzeCochange {
        #[command(flatten)]
        snapshot: SnapshotArg,
        /// Number of future commits used as the oracle [default: 100]
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Sample merges that add many co-change pairs, for manual inspection.
    SampleMerges {
        #[command(flatten)]
        snapshot: SnapshotArg,
        /// Minimum co-change pairs a merge must add [default: 7]
        #[arg(long)]
        min_added: Option<usize>,
        /// Sample size [default: 40]
        #[arg(long)]
        n: Option<usize>,
        /// Sampling seed [default: 0]
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render evaluation summaries as text tables.
    Report {
        /// `summary.json` files from `evaluate`.
        #[arg(long = "summary", value_name = "PATH", required = true)]
        summaries: Vec<PathBuf>,
    },
}

fn parse_strategy(s: &str) -> Result<S, String> {
    s.parse().map_err(|e: cochange::Error| e.to_string())
}

fn parse_pair(s: &str) -> Result<(S, S), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated strategies, got {s:?}"))?;
    Ok((parse_strategy(a.trim())?, parse_strategy(b.trim())?))
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(format!("expected on or off, got {s:?}")),
    }
}

fn parse_collector(s: &str) -> Result<Collector, String> {
    s.parse().map_err(|e: cochange::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
