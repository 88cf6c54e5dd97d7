//! Leave-one-out evaluation of paired branch handling strategies.

mod experiment;
pub mod output;
pub mod wilcoxon;

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{BranchHandlingStrategy, CommitGraph, CommitId, FilePath};
use crate::rational::{ratio, Rational};
use crate::recommend::Recommendation;

pub use experiment::{
    eligible, run_experiment, Eligibility, Experiment, ExperimentReport, ExperimentSummary,
    PairedRecord, StrategySummary, INELIGIBLE_FEW_CHANGESETS, INELIGIBLE_IDENTICAL,
    INELIGIBLE_NO_RULES, INELIGIBLE_SIZE,
};
pub use wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult};

/// Significance level for repository-level decisions.
pub const ALPHA: f64 = 0.05;

/// Commits with more changed files than this produce no test cases.
pub const MAX_TEST_CHANGESET: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TestCase {
    pub commit: CommitId,
    pub query: BTreeSet<FilePath>,
    pub oracle: FilePath,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Failure,
    NoPrediction,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Success => "success",
            Outcome::Failure => "failure",
            Outcome::NoPrediction => "no_prediction",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EvaluationRecord {
    pub test_case: TestCase,
    pub strategy: BranchHandlingStrategy,
    pub outcome: Outcome,
    pub oracle_rank: Option<usize>,
    #[serde(with = "crate::rational::serde_exact")]
    pub average_precision: Rational,
    /// Recommendations left after removing files already in the query.
    pub n_recommendations: usize,
    pub n_rules: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairedVerdict {
    WinA,
    WinB,
    Draw,
}

/// Leave-one-out test cases: every changed file once as the oracle, the
/// rest as the query. Commits with fewer than 2 or more than 10 changed
/// files yield none.
pub fn generate_test_cases(graph: &CommitGraph, commit: CommitId) -> Result<Vec<TestCase>> {
    let c = graph.commit(&commit)?;
    let n = c.changeset.len();
    if !(2..=MAX_TEST_CHANGESET).contains(&n) {
        return Ok(Vec::new());
    }
    Ok(c.changeset
        .iter()
        .map(|oracle| TestCase {
            commit,
            query: c.changeset.iter().filter(|f| *f != oracle).cloned().collect(),
            oracle: oracle.clone(),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub outcome: Outcome,
    pub oracle_rank: Option<usize>,
    pub average_precision: Rational,
    pub n_recommendations: usize,
}

/// Recommendations of query files do not count. With nothing left the
/// case is a no-prediction; otherwise the oracle's 1-based rank `r` gives
/// AP = 1/r, and a missing oracle is a failure.
pub fn classify(rec: &Recommendation, test_case: &TestCase) -> Classification {
    let effective: Vec<&FilePath> = rec
        .files()
        .filter(|f| !test_case.query.contains(*f))
        .collect();
    if effective.is_empty() {
        return Classification {
            outcome: Outcome::NoPrediction,
            oracle_rank: None,
            average_precision: Rational::zero(),
            n_recommendations: 0,
        };
    }
    match effective.iter().position(|f| **f == test_case.oracle) {
        Some(i) => Classification {
            outcome: Outcome::Success,
            oracle_rank: Some(i + 1),
            average_precision: ratio(1, i + 1),
            n_recommendations: effective.len(),
        },
        None => Classification {
            outcome: Outcome::Failure,
            oracle_rank: None,
            average_precision: Rational::zero(),
            n_recommendations: effective.len(),
        },
    }
}

pub fn evaluate(rec: &Recommendation, test_case: &TestCase) -> EvaluationRecord {
    let c = classify(rec, test_case);
    EvaluationRecord {
        test_case: test_case.clone(),
        strategy: rec.strategy,
        outcome: c.outcome,
        oracle_rank: c.oracle_rank,
        average_precision: c.average_precision,
        n_recommendations: c.n_recommendations,
        n_rules: rec.n_rules,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rates {
    #[serde(with = "crate::rational::serde_exact")]
    pub success_rate: Rational,
    #[serde(with = "crate::rational::serde_exact")]
    pub failure_rate: Rational,
    #[serde(with = "crate::rational::serde_exact")]
    pub no_prediction_rate: Rational,
    #[serde(with = "crate::rational::serde_exact")]
    pub mean_recommendations: Rational,
    #[serde(with = "crate::rational::serde_exact")]
    pub mean_rules: Rational,
}

pub fn aggregate_rates(records: &[EvaluationRecord]) -> Result<Rates> {
    if records.is_empty() {
        return Err(Error::Undefined("rate aggregation"));
    }
    let n = records.len();
    let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count();
    Ok(Rates {
        success_rate: ratio(count(Outcome::Success), n),
        failure_rate: ratio(count(Outcome::Failure), n),
        no_prediction_rate: ratio(count(Outcome::NoPrediction), n),
        mean_recommendations: ratio(records.iter().map(|r| r.n_recommendations).sum(), n),
        mean_rules: ratio(records.iter().map(|r| r.n_rules).sum(), n),
    })
}

/// Mean AP with no-prediction cases counted as 0.
pub fn map_all(records: &[EvaluationRecord]) -> Result<Rational> {
    crate::rational::mean(records.iter().map(|r| &r.average_precision))
        .ok_or(Error::Undefined("MAP_all"))
}

/// Mean AP over cases with at least one recommendation.
pub fn map_app(records: &[EvaluationRecord]) -> Result<Rational> {
    crate::rational::mean(
        records
            .iter()
            .filter(|r| r.outcome != Outcome::NoPrediction)
            .map(|r| &r.average_precision),
    )
    .ok_or(Error::Undefined("MAP_app"))
}

/// Higher AP wins. At AP 0 on both sides, the side that recommended nothing
/// beats the side that recommended only wrong files.
pub fn pairwise_verdict(a: &EvaluationRecord, b: &EvaluationRecord) -> PairedVerdict {
    use std::cmp::Ordering::*;
    match a.average_precision.cmp(&b.average_precision) {
        Greater => PairedVerdict::WinA,
        Less => PairedVerdict::WinB,
        Equal if a.average_precision.is_zero() => {
            match (a.n_recommendations == 0, b.n_recommendations == 0) {
                (true, false) => PairedVerdict::WinA,
                (false, true) => PairedVerdict::WinB,
                _ => PairedVerdict::Draw,
            }
        }
        Equal => PairedVerdict::Draw,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WinnerMetric {
    SuccessRate,
    MapAll,
    Wins,
}

impl WinnerMetric {
    pub const ALL: [WinnerMetric; 3] = [WinnerMetric::SuccessRate, WinnerMetric::MapAll, WinnerMetric::Wins];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepoVerdict {
    A,
    B,
    Draw,
}

/// Which strategy did better on one repository. `records_a[i]` and
/// `records_b[i]` must describe the same test case.
pub fn repo_level_winner(
    records_a: &[EvaluationRecord],
    records_b: &[EvaluationRecord],
    metric: WinnerMetric,
) -> Result<RepoVerdict> {
    if records_a.len() != records_b.len()
        || records_a.iter().zip(records_b).any(|(a, b)| a.test_case != b.test_case)
    {
        return Err(Error::contract("records are not paired by test case"));
    }
    if records_a.is_empty() {
        return Ok(RepoVerdict::Draw);
    }
    let by_order = |o: std::cmp::Ordering| match o {
        std::cmp::Ordering::Greater => RepoVerdict::A,
        std::cmp::Ordering::Less => RepoVerdict::B,
        std::cmp::Ordering::Equal => RepoVerdict::Draw,
    };
    match metric {
        WinnerMetric::SuccessRate => {
            let a = aggregate_rates(records_a)?.success_rate;
            let b = aggregate_rates(records_b)?.success_rate;
            Ok(by_order(a.cmp(&b)))
        }
        WinnerMetric::MapAll => {
            let pairs: Vec<_> = records_a
                .iter()
                .zip(records_b)
                .map(|(a, b)| (a.average_precision, b.average_precision))
                .collect();
            match wilcoxon_signed_rank(&pairs)? {
                Some(test) if test.p_value < ALPHA => {
                    let mean = test.n as f64 * (test.n as f64 + 1.0) / 4.0;
                    let direction = map_all(records_a)?.cmp(&map_all(records_b)?);
                    Ok(match direction {
                        std::cmp::Ordering::Equal => by_order(
                            test.statistic.partial_cmp(&mean).unwrap_or(std::cmp::Ordering::Equal),
                        ),
                        d => by_order(d),
                    })
                }
                _ => Ok(RepoVerdict::Draw),
            }
        }
        WinnerMetric::Wins => {
            let (mut a, mut b) = (0usize, 0usize);
            for (ra, rb) in records_a.iter().zip(records_b) {
                match pairwise_verdict(ra, rb) {
                    PairedVerdict::WinA => a += 1,
                    PairedVerdict::WinB => b += 1,
                    PairedVerdict::Draw => {}
                }
            }
            Ok(by_order(a.cmp(&b)))
        }
    }
}
