//! The paired experiment: walk the mainline, keep eligible commits, run both
//! strategies on every leave-one-out case and tally the outcomes.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    aggregate_rates, evaluate, generate_test_cases, map_all, map_app, pairwise_verdict,
    repo_level_winner, EvaluationRecord, Outcome, PairedVerdict, RepoVerdict, TestCase,
    WinnerMetric, MAX_TEST_CHANGESET,
};
use crate::error::{Error, Result};
use crate::history::{ancestors_first_parent, BranchHandlingStrategy, CommitGraph, CommitId};
use crate::rational::{ratio, Rational};
use crate::recommend::{
    collect_from_history, equalize, history_before, recommend_from_db, Recommendation,
    RecommenderConfig,
};
use crate::rules::TransactionDatabase;

pub const INELIGIBLE_SIZE: &str = "changeset size outside 2..=10";
pub const INELIGIBLE_IDENTICAL: &str = "identical changesets";
pub const INELIGIBLE_FEW_CHANGESETS: &str = "fewer than five changesets";
pub const INELIGIBLE_NO_RULES: &str = "no association rules";

const MIN_TRANSACTIONS: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Eligibility {
    pub eligible: bool,
    /// First failing condition, if any.
    pub reason: Option<&'static str>,
}

impl Eligibility {
    fn yes() -> Self {
        Eligibility { eligible: true, reason: None }
    }

    fn no(reason: &'static str) -> Self {
        Eligibility { eligible: false, reason: Some(reason) }
    }
}

/// Both strategies' work for one test case, before fairness is applied.
struct CaseWork {
    test_case: TestCase,
    db: (TransactionDatabase, TransactionDatabase),
    rec: (Recommendation, Recommendation),
}

fn commit_work(
    graph: &CommitGraph,
    commit: CommitId,
    strategies: (BranchHandlingStrategy, BranchHandlingStrategy),
    config: &RecommenderConfig,
) -> Result<Vec<CaseWork>> {
    let cases = generate_test_cases(graph, commit)?;
    if cases.is_empty() {
        return Ok(Vec::new());
    }
    let hist_a = history_before(graph, commit, strategies.0)?;
    let hist_b = history_before(graph, commit, strategies.1)?;
    cases
        .into_iter()
        .map(|test_case| {
            let db_a = collect_from_history(&hist_a, &test_case.query, config);
            let db_b = collect_from_history(&hist_b, &test_case.query, config);
            let rec_a = recommend_from_db(&db_a, &test_case.query, strategies.0, config)?;
            let rec_b = recommend_from_db(&db_b, &test_case.query, strategies.1, config)?;
            Ok(CaseWork { test_case, db: (db_a, db_b), rec: (rec_a, rec_b) })
        })
        .collect()
}

fn judge(graph: &CommitGraph, commit: CommitId, work: &[CaseWork]) -> Result<Eligibility> {
    let size = graph.commit(&commit)?.changeset.len();
    if !(2..=MAX_TEST_CHANGESET).contains(&size) {
        return Ok(Eligibility::no(INELIGIBLE_SIZE));
    }
    if !work.iter().any(|w| w.db.0 != w.db.1) {
        return Ok(Eligibility::no(INELIGIBLE_IDENTICAL));
    }
    if !work
        .iter()
        .any(|w| w.db.0.len() >= MIN_TRANSACTIONS || w.db.1.len() >= MIN_TRANSACTIONS)
    {
        return Ok(Eligibility::no(INELIGIBLE_FEW_CHANGESETS));
    }
    if !work.iter().any(|w| w.rec.0.n_rules > 0 || w.rec.1.n_rules > 0) {
        return Ok(Eligibility::no(INELIGIBLE_NO_RULES));
    }
    Ok(Eligibility::yes())
}

/// Whether `commit` takes part in the experiment. Conditions are checked in
/// order: changeset size, differing collections for some query, at least
/// five transactions and at least one rule under either strategy.
pub fn eligible(
    graph: &CommitGraph,
    commit: CommitId,
    strategies: (BranchHandlingStrategy, BranchHandlingStrategy),
    config: &RecommenderConfig,
) -> Result<Eligibility> {
    let work = commit_work(graph, commit, strategies, config)?;
    judge(graph, commit, &work)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Experiment {
    pub strategies: (BranchHandlingStrategy, BranchHandlingStrategy),
    pub config: RecommenderConfig,
    pub fairness: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairedRecord {
    pub a: EvaluationRecord,
    pub b: EvaluationRecord,
    pub verdict: PairedVerdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CommitFailure {
    pub commit: CommitId,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExperimentReport {
    pub repo_label: String,
    pub experiment: Experiment,
    pub commits_considered: usize,
    pub eligible_commits: usize,
    /// Ineligible commit counts keyed by reason.
    pub ineligible: BTreeMap<&'static str, usize>,
    pub records: Vec<PairedRecord>,
    pub failures: Vec<CommitFailure>,
}

enum CommitResult {
    Eligible(Vec<PairedRecord>),
    Ineligible(&'static str),
}

fn run_commit(graph: &CommitGraph, commit: CommitId, exp: &Experiment) -> Result<CommitResult> {
    let work = commit_work(graph, commit, exp.strategies, &exp.config)?;
    let verdict = judge(graph, commit, &work)?;
    if let Some(reason) = verdict.reason {
        return Ok(CommitResult::Ineligible(reason));
    }
    let records = work
        .into_iter()
        .map(|w| {
            let (mut ra, mut rb) = w.rec;
            if exp.fairness {
                equalize(&mut ra, &mut rb);
            }
            let a = evaluate(&ra, &w.test_case);
            let b = evaluate(&rb, &w.test_case);
            let verdict = pairwise_verdict(&a, &b);
            PairedRecord { a, b, verdict }
        })
        .collect();
    Ok(CommitResult::Eligible(records))
}

/// Runs the paired protocol over the non-merge commits of the first-parent
/// chain of head. Commits are processed in parallel; the report lists them
/// newest first regardless of scheduling.
pub fn run_experiment(
    graph: &CommitGraph,
    repo_label: &str,
    experiment: &Experiment,
) -> Result<ExperimentReport> {
    let (a, b) = experiment.strategies;
    if a == b {
        return Err(Error::contract("paired experiment needs two distinct strategies"));
    }
    experiment.config.validate()?;
    let commits: Vec<CommitId> = ancestors_first_parent(graph, graph.head())?
        .into_iter()
        .filter(|id| graph.get(id).is_some_and(|c| !c.is_merge()))
        .collect();
    let results: Vec<(CommitId, Result<CommitResult>)> = commits
        .par_iter()
        .map(|&id| (id, run_commit(graph, id, experiment)))
        .collect();

    let mut report = ExperimentReport {
        repo_label: repo_label.to_string(),
        experiment: experiment.clone(),
        commits_considered: commits.len(),
        eligible_commits: 0,
        ineligible: BTreeMap::new(),
        records: Vec::new(),
        failures: Vec::new(),
    };
    for (commit, result) in results {
        match result {
            Ok(CommitResult::Eligible(records)) => {
                report.eligible_commits += 1;
                report.records.extend(records);
            }
            Ok(CommitResult::Ineligible(reason)) => {
                *report.ineligible.entry(reason).or_default() += 1;
            }
            Err(e) => report.failures.push(CommitFailure { commit, message: e.to_string() }),
        }
    }
    Ok(report)
}

/// Exact tallies for one strategy; rates are derived from the counts so
/// summaries of several repositories can be pooled without rounding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: BranchHandlingStrategy,
    pub events: usize,
    pub successes: usize,
    pub failures: usize,
    pub no_predictions: usize,
    pub total_recommendations: usize,
    pub total_rules: usize,
    #[serde(with = "crate::rational::serde_exact")]
    pub total_ap: Rational,
    pub wins: usize,
    pub draws: usize,
    #[serde(with = "crate::rational::serde_exact_opt")]
    pub mean_recommendations: Option<Rational>,
    #[serde(with = "crate::rational::serde_exact_opt")]
    pub mean_rules: Option<Rational>,
    #[serde(with = "crate::rational::serde_exact_opt")]
    pub success_rate: Option<Rational>,
    #[serde(with = "crate::rational::serde_exact_opt")]
    pub failure_rate: Option<Rational>,
    #[serde(with = "crate::rational::serde_exact_opt")]
    pub no_prediction_rate: Option<Rational>,
    #[serde(with = "crate::rational::serde_exact_opt")]
    pub map_all: Option<Rational>,
    #[serde(with = "crate::rational::serde_exact_opt")]
    pub map_app: Option<Rational>,
}

impl StrategySummary {
    fn from_records(
        strategy: BranchHandlingStrategy,
        records: &[EvaluationRecord],
        wins: usize,
        draws: usize,
    ) -> Self {
        let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count();
        let rates = aggregate_rates(records).ok();
        StrategySummary {
            strategy,
            events: records.len(),
            successes: count(Outcome::Success),
            failures: count(Outcome::Failure),
            no_predictions: count(Outcome::NoPrediction),
            total_recommendations: records.iter().map(|r| r.n_recommendations).sum(),
            total_rules: records.iter().map(|r| r.n_rules).sum(),
            total_ap: records.iter().map(|r| r.average_precision).sum(),
            wins,
            draws,
            mean_recommendations: rates.as_ref().map(|r| r.mean_recommendations),
            mean_rules: rates.as_ref().map(|r| r.mean_rules),
            success_rate: rates.as_ref().map(|r| r.success_rate),
            failure_rate: rates.as_ref().map(|r| r.failure_rate),
            no_prediction_rate: rates.as_ref().map(|r| r.no_prediction_rate),
            map_all: map_all(records).ok(),
            map_app: map_app(records).ok(),
        }
    }

    /// Pools tallies of the same strategy from several repositories.
    pub fn pooled(parts: &[&StrategySummary]) -> Option<StrategySummary> {
        let first = parts.first()?;
        let sum = |f: fn(&StrategySummary) -> usize| parts.iter().map(|p| f(p)).sum::<usize>();
        let events = sum(|s| s.events);
        let successes = sum(|s| s.successes);
        let failures = sum(|s| s.failures);
        let no_predictions = sum(|s| s.no_predictions);
        let total_recommendations = sum(|s| s.total_recommendations);
        let total_rules = sum(|s| s.total_rules);
        let total_ap: Rational = parts.iter().map(|p| p.total_ap).sum();
        let answered = events - no_predictions;
        let of = |n: usize, d: usize| (d > 0).then(|| ratio(n, d));
        Some(StrategySummary {
            strategy: first.strategy,
            events,
            successes,
            failures,
            no_predictions,
            total_recommendations,
            total_rules,
            total_ap,
            wins: sum(|s| s.wins),
            draws: sum(|s| s.draws),
            mean_recommendations: of(total_recommendations, events),
            mean_rules: of(total_rules, events),
            success_rate: of(successes, events),
            failure_rate: of(failures, events),
            no_prediction_rate: of(no_predictions, events),
            map_all: (events > 0).then(|| total_ap / Rational::from_integer(events as i64)),
            map_app: (answered > 0).then(|| total_ap / Rational::from_integer(answered as i64)),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub repo_label: String,
    pub repo_set: Option<String>,
    pub fairness: bool,
    pub events: usize,
    pub eligible_commits: usize,
    pub commits_considered: usize,
    pub failed_commits: usize,
    pub a: StrategySummary,
    pub b: StrategySummary,
    /// Repository-level verdict per metric; absent when there are no events.
    pub winners: BTreeMap<WinnerMetric, RepoVerdict>,
}

impl ExperimentReport {
    pub fn summary(&self, repo_set: Option<&str>) -> Result<ExperimentSummary> {
        let ra: Vec<EvaluationRecord> = self.records.iter().map(|r| r.a.clone()).collect();
        let rb: Vec<EvaluationRecord> = self.records.iter().map(|r| r.b.clone()).collect();
        let tally = |v: PairedVerdict| self.records.iter().filter(|r| r.verdict == v).count();
        let draws = tally(PairedVerdict::Draw);
        let (sa, sb) = self.experiment.strategies;
        let mut winners = BTreeMap::new();
        if !self.records.is_empty() {
            for metric in WinnerMetric::ALL {
                winners.insert(metric, repo_level_winner(&ra, &rb, metric)?);
            }
        }
        Ok(ExperimentSummary {
            repo_label: self.repo_label.clone(),
            repo_set: repo_set.map(str::to_string),
            fairness: self.experiment.fairness,
            events: self.records.len(),
            eligible_commits: self.eligible_commits,
            commits_considered: self.commits_considered,
            failed_commits: self.failures.len(),
            a: StrategySummary::from_records(sa, &ra, tally(PairedVerdict::WinA), draws),
            b: StrategySummary::from_records(sb, &rb, tally(PairedVerdict::WinB), draws),
            winners,
        })
    }
}
