//! Subcommand implementations.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use cochange::branches::{
    self, added_cochanges, branch_info, cochange_study, commit_cap_filter, diagnose_causes,
    first_parent_collection_sizes, median, sample_heavy_merges, winner_rate_table, Characteristic,
    Cohort,
};
use cochange::eval::output::{write_json, write_records_csv, write_summary_json};
use cochange::eval::{run_experiment, Experiment, ExperimentSummary, PairedVerdict};
use cochange::history::strategy_walk;
use cochange::ingest::{ingest_repository, HistorySnapshot};
use cochange::recommend::{collect_from_history, history_before, recommend_from_db};
use cochange::{CommitId, FilePath};
use serde::Serialize;

use crate::config::{ConfigFile, Overrides, RunConfig, OUTPUT_DIR_ENV};
use crate::metadata::{self, HistorySource, Metadata, SnapshotRef};
use crate::{Cli, Command, ExperimentArgs, UsageError};

struct Run {
    name: &'static str,
    config: RunConfig,
    snapshot: Option<SnapshotRef>,
    source: Option<HistorySource>,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
}

impl Run {
    fn dir(&self) -> &Path {
        &self.config.output_dir
    }

    fn create(&mut self, file: &str) -> anyhow::Result<BufWriter<fs::File>> {
        let path = self.dir().join(file);
        let f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.outputs.push(file.to_string());
        Ok(BufWriter::new(f))
    }

    fn load(&mut self, path: &Path) -> anyhow::Result<HistorySnapshot> {
        let snap = HistorySnapshot::load(path)?;
        self.snapshot = Some(metadata::snapshot_ref(path)?);
        Ok(snap)
    }

    fn finish(self) -> anyhow::Result<()> {
        let meta = Metadata {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.name,
            created_unix: metadata::now_unix(),
            config: &self.config,
            snapshot: self.snapshot,
            source: self.source,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        metadata::write(&self.config.output_dir, &meta)
    }
}

fn experiment_overrides(args: &ExperimentArgs) -> Overrides {
    Overrides {
        pair: args.pair,
        fairness: args.fairness,
        collector: args.collector,
        unsafe_override: args.unsafe_override,
        ..Default::default()
    }
}

fn experiment(cfg: &RunConfig) -> Experiment {
    Experiment {
        strategies: cfg.strategies,
        config: cfg.recommender.clone(),
        fairness: cfg.fairness,
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let env_dir = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);

    let (name, mut flags) = match &cli.command {
        Command::Ingest { .. } => ("ingest", Overrides::default()),
        Command::SnapshotValidate { .. } => ("snapshot-validate", Overrides::default()),
        Command::Recommend { strategy, collector, unsafe_override, .. } => {
            let pair = if *strategy == cochange::BranchHandlingStrategy::FirstParentMerge {
                crate::config::Profile::Merge.pair()
            } else {
                crate::config::Profile::NoMerge.pair()
            };
            let o = Overrides {
                pair: Some(pair),
                collector: *collector,
                unsafe_override: *unsafe_override,
                ..Default::default()
            };
            ("recommend", o)
        }
        Command::Evaluate { experiment, .. } => ("evaluate", experiment_overrides(experiment)),
        Command::AnalyzeBranches { experiment, bins, many_causes, cap, .. } => {
            let mut o = experiment_overrides(experiment);
            o.bins = *bins;
            o.many_causes = *many_causes;
            o.cap = *cap;
            ("analyze-branches", o)
        }
        Command::AnalyzeCochange { horizon, .. } => {
            ("analyze-cochange", Overrides { horizon: *horizon, ..Default::default() })
        }
        Command::SampleMerges { min_added, n, seed, .. } => (
            "sample-merges",
            Overrides {
                min_added_cochanges: *min_added,
                sample_size: *n,
                seed: *seed,
                ..Default::default()
            },
        ),
        Command::Report { .. } => ("report", Overrides::default()),
    };
    flags.output_dir = cli.out.clone();
    let config = RunConfig::resolve(file, env_dir, flags)?;
    fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("creating {}", config.output_dir.display()))?;

    let mut run = Run { name, config, snapshot: None, source: None, inputs: Vec::new(), outputs: Vec::new() };
    match cli.command {
        Command::Ingest { repo, head_ref, label, snapshot_out } => {
            let graph = ingest_repository(&repo, &head_ref)?;
            run.source = Some(HistorySource {
                repo: repo.clone(),
                head_ref: head_ref.clone(),
                head: graph.head().to_string(),
            });
            let label = label.unwrap_or_else(|| {
                repo.canonicalize()
                    .ok()
                    .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                    .unwrap_or_else(|| "repository".to_string())
            });
            let path = match snapshot_out {
                Some(p) => p,
                None => {
                    run.outputs.push("snapshot.jsonl".to_string());
                    run.dir().join("snapshot.jsonl")
                }
            };
            HistorySnapshot::new(label, graph).save(&path)?;
            run.snapshot = Some(metadata::snapshot_ref(&path)?);
            println!("wrote {}", path.display());
        }
        Command::SnapshotValidate { snapshot } => {
            let snap = run.load(&snapshot.snapshot)?;
            let stats = SnapshotStats::of(&snap);
            println!(
                "{}: {} commits ({} merges), head {}, {} boundary commits",
                stats.repo_label, stats.commits, stats.merges, stats.head, stats.boundaries
            );
            write_json(&stats, run.create("validation.json")?)?;
        }
        Command::Recommend { snapshot, files, at, strategy, .. } => {
            let snap = run.load(&snapshot.snapshot)?;
            let graph = &snap.graph;
            let query = files
                .iter()
                .map(|f| FilePath::new(f.trim()))
                .collect::<Result<std::collections::BTreeSet<_>, _>>()
                .map_err(|e| UsageError(e.to_string()))?;
            let history = match at {
                Some(at) => {
                    let id: CommitId = at.parse().map_err(|e: cochange::Error| UsageError(e.to_string()))?;
                    history_before(graph, id, strategy)?
                }
                None => strategy_walk(graph, graph.head(), strategy)?,
            };
            let db = collect_from_history(&history, &query, &run.config.recommender);
            let rec = recommend_from_db(&db, &query, strategy, &run.config.recommender)?;
            for (i, e) in rec.entries.iter().enumerate() {
                println!(
                    "{:>2}  {}  support {}  confidence {}",
                    i + 1,
                    e.file,
                    cochange::rational::fmt_decimal(&e.via_rule.support, 3),
                    cochange::rational::fmt_decimal(&e.via_rule.confidence, 3)
                );
            }
            if rec.entries.is_empty() {
                println!("no recommendation ({} transactions, {} rules)", rec.n_transactions, rec.n_rules);
            }
            write_json(&rec, run.create("recommendation.json")?)?;
        }
        Command::Evaluate { snapshot, repo_set, .. } => {
            let snap = run.load(&snapshot.snapshot)?;
            let report = run_experiment(&snap.graph, &snap.repo_label, &experiment(&run.config))?;
            let summary = report.summary(repo_set.as_deref())?;
            write_records_csv(&report, run.create("records.csv")?)?;
            write_summary_json(&summary, run.create("summary.json")?)?;
            for f in &report.failures {
                eprintln!("warning: commit {} skipped: {}", f.commit, f.message);
            }
            println!(
                "{}: {} events from {} eligible commits ({} considered)",
                summary.repo_label, summary.events, summary.eligible_commits, summary.commits_considered
            );
        }
        Command::AnalyzeBranches { snapshot, cap_median, .. } => {
            let snap = run.load(&snapshot.snapshot)?;
            analyze_branches(&mut run, &snap, cap_median)?;
        }
        Command::AnalyzeCochange { snapshot, .. } => {
            let snap = run.load(&snapshot.snapshot)?;
            let study = cochange_study(&snap.graph, run.config.horizon)?;
            branches::output::write_precision_csv(&study, run.create("precision.csv")?)?;
            write_json(&study, run.create("cochange.json")?)?;
            println!(
                "{} merges studied, {} without future commits",
                study.rows.len(),
                study.diagnostics.merges_without_future
            );
        }
        Command::SampleMerges { snapshot, .. } => {
            let snap = run.load(&snapshot.snapshot)?;
            let g = &snap.graph;
            let picked = sample_heavy_merges(g, run.config.min_added_cochanges, run.config.sample_size, run.config.seed)?;
            let rows = picked
                .iter()
                .map(|m| {
                    let info = branch_info(g, *m)?;
                    Ok(SampledMerge {
                        merge: *m,
                        added_cochanges: added_cochanges(g, *m)?,
                        branch_length: info.branch_length,
                        merge_size: info.merge_size,
                    })
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            for r in &rows {
                println!("{}  +{} pairs  branch {}  size {}", r.merge.to_hex(), r.added_cochanges, r.branch_length, r.merge_size);
            }
            write_json(&rows, run.create("sample.json")?)?;
        }
        Command::Report { summaries } => {
            let mut loaded = Vec::new();
            for path in &summaries {
                let text = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                let s: ExperimentSummary = serde_json::from_slice(&text)
                    .with_context(|| format!("parsing summary {}", path.display()))?;
                loaded.push(s);
                run.inputs.push(path.clone());
            }
            let text = crate::report::render(&loaded);
            print!("{text}");
            fs::write(run.dir().join("report.txt"), &text)?;
            run.outputs.push("report.txt".to_string());
        }
    }
    run.finish()
}

#[derive(Serialize)]
struct SnapshotStats {
    repo_label: String,
    head: String,
    commits: usize,
    merges: usize,
    boundaries: usize,
}

impl SnapshotStats {
    fn of(s: &HistorySnapshot) -> Self {
        SnapshotStats {
            repo_label: s.repo_label.clone(),
            head: s.graph.head().to_hex(),
            commits: s.graph.len(),
            merges: s.graph.topological().filter(|c| c.is_merge()).count(),
            boundaries: s.graph.boundaries().len(),
        }
    }
}

#[derive(Serialize)]
struct SampledMerge {
    merge: CommitId,
    added_cochanges: usize,
    branch_length: usize,
    merge_size: usize,
}

#[derive(Serialize)]
struct DiagnosisRow {
    diagnosis: branches::CausalDiagnosis,
    verdict: PairedVerdict,
}

fn analyze_branches(run: &mut Run, snap: &HistorySnapshot, cap_median: bool) -> anyhow::Result<()> {
    let g = &snap.graph;
    let exp = experiment(&run.config);
    let report = run_experiment(g, &snap.repo_label, &exp)?;
    let cases: Vec<_> = report.records.iter().map(|r| r.a.test_case.clone()).collect();
    let cap = if cap_median {
        let sizes = first_parent_collection_sizes(&cases, g, &exp.config)?;
        median(&sizes).map(|m| m.floor().to_integer() as usize)
    } else {
        run.config.cap
    };
    // remember the cap actually used
    run.config.cap = cap;
    let kept: std::collections::HashSet<_> =
        commit_cap_filter(cases, g, &exp.config, cap)?.into_iter().collect();

    let mut rows = Vec::new();
    for r in &report.records {
        if !kept.contains(&r.a.test_case) {
            continue;
        }
        if let Some(d) = diagnose_causes(g, &r.a.test_case, exp.strategies, &exp.config)? {
            rows.push(DiagnosisRow { diagnosis: d, verdict: r.verdict });
        }
    }
    let pairs: Vec<_> = rows.iter().map(|r| (r.diagnosis.clone(), r.verdict)).collect();
    let mut tables = Vec::new();
    for cohort in [Cohort::Single, Cohort::AtLeast(run.config.many_causes)] {
        for ch in [Characteristic::BranchLength, Characteristic::MergeSize] {
            tables.push(winner_rate_table(&pairs, ch, cohort, run.config.bins));
        }
    }
    branches::output::write_winner_tables(&tables, run.create("winner_rates.csv")?)?;
    write_json(&rows, run.create("diagnoses.json")?)?;
    println!("{} diagnosed cases out of {} events", rows.len(), report.records.len());
    Ok(())
}
