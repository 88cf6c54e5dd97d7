//! The "other files" recommender: collect changesets touching the query,
//! mine association rules, fire the rules whose antecedent lies inside the
//! query.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{
    strategy_walk, BranchHandlingStrategy, ChangesetEntry, CommitGraph, CommitId, FilePath,
};
use crate::rational::Rational;
use crate::rules::{top_single_consequent_rules, AssociationRule, TransactionDatabase};

/// How candidate commits are gathered for one query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Collector {
    /// One newest-first pass keeping commits that touch any query file and
    /// are small enough, until `max_commits` are kept.
    Sequential,
    /// Up to `max_commits` commits per query file, merged, then large
    /// commits dropped.
    #[serde(rename = "per-file")]
    PerFileSlice,
}

impl std::str::FromStr for Collector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Collector::Sequential),
            "per-file" => Ok(Collector::PerFileSlice),
            other => Err(Error::contract(format!(
                "unknown collector {other:?} (expected sequential or per-file)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecommenderConfig {
    #[serde(with = "crate::rational::serde_exact")]
    pub minsup: Rational,
    #[serde(with = "crate::rational::serde_exact")]
    pub minconf: Rational,
    pub max_changeset_size: usize,
    pub max_commits: usize,
    pub max_rules: usize,
    pub collector: Collector,
}

impl Default for RecommenderConfig {
    fn default() -> Self {
        RecommenderConfig {
            minsup: Rational::new(1, 10),
            minconf: Rational::new(1, 10),
            max_changeset_size: 10,
            max_commits: 100,
            max_rules: 10,
            collector: Collector::Sequential,
        }
    }
}

impl RecommenderConfig {
    pub fn with_collector(mut self, collector: Collector) -> Self {
        self.collector = collector;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let zero = Rational::from_integer(0);
        let one = Rational::from_integer(1);
        if self.minsup <= zero || self.minsup > one || self.minconf <= zero || self.minconf > one {
            return Err(Error::contract("minsup and minconf must lie in (0, 1]"));
        }
        if self.max_changeset_size == 0 || self.max_commits == 0 || self.max_rules == 0 {
            return Err(Error::contract("size limits must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub files: BTreeSet<FilePath>,
    /// History is cut just before this commit.
    pub at_commit: CommitId,
}

impl Query {
    pub fn new(files: impl IntoIterator<Item = FilePath>, at_commit: CommitId) -> Result<Self> {
        let files: BTreeSet<FilePath> = files.into_iter().collect();
        if files.is_empty() {
            return Err(Error::contract("query needs at least one file"));
        }
        Ok(Query { files, at_commit })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecommendationEntry {
    pub file: FilePath,
    #[serde(with = "crate::rational::serde_exact")]
    pub score: Rational,
    pub via_rule: AssociationRule,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Recommendation {
    pub strategy: BranchHandlingStrategy,
    pub entries: Vec<RecommendationEntry>,
    /// Rules that survived filtering, fired or not.
    pub n_rules: usize,
    pub n_transactions: usize,
}

impl Recommendation {
    pub fn files(&self) -> impl Iterator<Item = &FilePath> {
        self.entries.iter().map(|e| &e.file)
    }
}

/// The strategy's changeset stream for everything before `at_commit`.
pub fn history_before(
    graph: &CommitGraph,
    at_commit: CommitId,
    strategy: BranchHandlingStrategy,
) -> Result<Vec<ChangesetEntry>> {
    let mut walk = strategy_walk(graph, at_commit, strategy)?;
    walk.retain(|e| e.commit_id != at_commit);
    Ok(walk)
}

/// Applies the collector to an already extracted history.
pub fn collect_from_history(
    history: &[ChangesetEntry],
    query: &BTreeSet<FilePath>,
    config: &RecommenderConfig,
) -> TransactionDatabase {
    // a merge is judged by its whole diff, not just the part it contributes
    let small = |e: &ChangesetEntry| e.commit_size.max(e.files.len()) <= config.max_changeset_size;
    let touches = |e: &ChangesetEntry| e.files.iter().any(|f| query.contains(f));
    match config.collector {
        Collector::Sequential => TransactionDatabase::from_entries(
            history
                .iter()
                .filter(|e| touches(e) && small(e))
                .take(config.max_commits),
        ),
        Collector::PerFileSlice => {
            let mut keep: HashSet<usize> = HashSet::new();
            for file in query {
                keep.extend(
                    history
                        .iter()
                        .enumerate()
                        .filter(|(_, e)| e.files.contains(file))
                        .take(config.max_commits)
                        .map(|(i, _)| i),
                );
            }
            TransactionDatabase::from_entries(
                history
                    .iter()
                    .enumerate()
                    .filter(|(i, e)| keep.contains(i) && small(e))
                    .map(|(_, e)| e),
            )
        }
    }
}

pub fn collect_commits(
    graph: &CommitGraph,
    query: &Query,
    strategy: BranchHandlingStrategy,
    config: &RecommenderConfig,
) -> Result<TransactionDatabase> {
    let history = history_before(graph, query.at_commit, strategy)?;
    Ok(collect_from_history(&history, &query.files, config))
}

/// Mines rules from `db` and fires them against the query.
pub fn recommend_from_db(
    db: &TransactionDatabase,
    query: &BTreeSet<FilePath>,
    strategy: BranchHandlingStrategy,
    config: &RecommenderConfig,
) -> Result<Recommendation> {
    let rules = if db.is_empty() {
        Vec::new()
    } else {
        top_single_consequent_rules(db, config.minsup, config.minconf, config.max_rules)?
    };
    let n_rules = rules.len();
    let entries = fire_rules(rules, query);
    Ok(Recommendation {
        strategy,
        entries,
        n_rules,
        n_transactions: db.len(),
    })
}

/// Adopts the consequent of every rule whose antecedent lies inside the
/// query. `rules` must already be filtered and ranked; each file is listed
/// once, at its best-ranked rule.
pub fn fire_rules(rules: Vec<AssociationRule>, query: &BTreeSet<FilePath>) -> Vec<RecommendationEntry> {
    let mut seen = HashSet::new();
    rules
        .into_iter()
        .filter(|r| r.antecedent.is_subset(query))
        .filter_map(|r| {
            let file = r.consequent.iter().next()?.clone();
            seen.insert(file.clone()).then(|| RecommendationEntry {
                file,
                score: r.support,
                via_rule: r,
            })
        })
        .collect()
}

pub fn recommend(
    graph: &CommitGraph,
    query: &Query,
    strategy: BranchHandlingStrategy,
    config: &RecommenderConfig,
) -> Result<Recommendation> {
    config.validate()?;
    let db = collect_commits(graph, query, strategy, config)?;
    recommend_from_db(&db, &query.files, strategy, config)
}

/// Cuts both lists to the shorter length.
pub fn equalize(a: &mut Recommendation, b: &mut Recommendation) {
    let n = a.entries.len().min(b.entries.len());
    a.entries.truncate(n);
    b.entries.truncate(n);
}

pub fn paired_recommend(
    graph: &CommitGraph,
    query: &Query,
    strategies: (BranchHandlingStrategy, BranchHandlingStrategy),
    config: &RecommenderConfig,
    fairness: bool,
) -> Result<(Recommendation, Recommendation)> {
    if strategies.0 == strategies.1 {
        return Err(Error::contract("paired recommendation needs two distinct strategies"));
    }
    let mut a = recommend(graph, query, strategies.0, config)?;
    let mut b = recommend(graph, query, strategies.1, config)?;
    if fairness {
        equalize(&mut a, &mut b);
    }
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Transaction;

    fn set(files: &[&str]) -> BTreeSet<FilePath> {
        files.iter().map(|f| FilePath::from(*f)).collect()
    }

    fn db(rows: &[&[&'static str]]) -> TransactionDatabase {
        TransactionDatabase::new(
            rows.iter()
                .enumerate()
                .map(|(i, r)| Transaction {
                    files: set(r),
                    source_commit: CommitId::from_bytes([i as u8 + 1; 20]),
                })
                .collect(),
        )
        .unwrap()
    }

    fn rule(ante: &[&str], cons: &str, s: Rational) -> AssociationRule {
        AssociationRule {
            antecedent: set(ante),
            consequent: set(&[cons]),
            support: s,
            confidence: Rational::new(1, 1),
        }
    }

    #[test]
    fn merge_with_large_diff_is_dropped_even_when_contributing_few_files() {
        use crate::history::Commit;
        use crate::synth::fixtures::id;
        let wide = ["w0", "w1", "w2", "w3", "w4", "w5", "w6", "w7", "w8", "w9"];
        let graph = CommitGraph::new(
            vec![
                Commit::new(id("R"), vec![], 1, ["a", "b"]),
                Commit::new(id("M1"), vec![id("R")], 2, ["a", "b"]),
                Commit::new(id("B1"), vec![id("R")], 3, wide),
                Commit::new(id("J"), vec![id("M1"), id("B1")], 4, wide).with_additional_changes(["a"]),
                Commit::new(id("T"), vec![id("J")], 5, ["a", "b"]),
            ],
            id("T"),
            [],
        )
        .unwrap();
        let q = Query::new([FilePath::from("a")], id("T")).unwrap();
        for s in BranchHandlingStrategy::ALL {
            for collector in [Collector::Sequential, Collector::PerFileSlice] {
                let cfg = RecommenderConfig::default().with_collector(collector);
                let db = collect_commits(&graph, &q, s, &cfg).unwrap();
                assert!(db.transactions().iter().all(|t| t.source_commit != id("J")), "{s} {collector:?}");
                assert_eq!(db.len(), 2);
            }
        }
    }

    #[test]
    fn only_rules_with_antecedent_inside_query_fire() {
        let rules = vec![
            rule(&["a"], "b", Rational::new(3, 5)),
            rule(&["a", "c"], "d", Rational::new(2, 5)),
        ];
        let entries = fire_rules(rules, &set(&["a"]));
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].file.as_str(), "b");
        assert_eq!(entries[0].score, Rational::new(3, 5));
    }

    #[test]
    fn fired_duplicates_keep_best_ranked_rule() {
        let rules = vec![
            rule(&["a"], "x", Rational::new(1, 2)),
            rule(&["b"], "x", Rational::new(3, 10)),
        ];
        let entries = fire_rules(rules, &set(&["a", "b"]));
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].score, Rational::new(1, 2));
    }

    #[test]
    fn empty_database_gives_empty_recommendation() {
        let rec = recommend_from_db(
            &TransactionDatabase::default(),
            &set(&["a"]),
            BranchHandlingStrategy::Full,
            &RecommenderConfig::default(),
        )
        .unwrap();
        assert!(rec.entries.is_empty());
        assert_eq!(rec.n_rules, 0);
    }

    #[test]
    fn same_file_from_two_rules_keeps_best_score() {
        // a->x s=1/2 and b->x s=3/10
        let rows: Vec<&[&'static str]> = vec![
            &["a", "x"],
            &["a", "x"],
            &["a", "x", "b"],
            &["a", "x", "b"],
            &["a", "x"],
            &["b"],
            &["b"],
            &["c"],
            &["c"],
            &["c"],
        ];
        let db = db(&rows);
        let config = RecommenderConfig {
            minconf: Rational::new(2, 5),
            ..RecommenderConfig::default()
        };
        let rec = recommend_from_db(&db, &set(&["a", "b"]), BranchHandlingStrategy::Full, &config).unwrap();
        let xs: Vec<_> = rec.entries.iter().filter(|e| e.file.as_str() == "x").collect();
        assert_eq!(xs.len(), 1);
        assert_eq!(xs[0].score, Rational::new(1, 2));
    }

    #[test]
    fn equalize_truncates_to_shorter_list() {
        let db4 = db(&[&["a", "b", "c", "d", "e"]]);
        let db2 = db(&[&["a", "b", "c"]]);
        let cfg = RecommenderConfig::default();
        let mut a = recommend_from_db(&db4, &set(&["a"]), BranchHandlingStrategy::Full, &cfg).unwrap();
        let mut b = recommend_from_db(&db2, &set(&["a"]), BranchHandlingStrategy::FirstParentMerge, &cfg).unwrap();
        assert_eq!((a.entries.len(), b.entries.len()), (4, 2));
        equalize(&mut a, &mut b);
        assert_eq!((a.entries.len(), b.entries.len()), (2, 2));
    }

    #[test]
    fn config_defaults() {
        let c = RecommenderConfig::default();
        assert_eq!(c.minsup, Rational::new(1, 10));
        assert_eq!(c.minconf, Rational::new(1, 10));
        assert_eq!((c.max_changeset_size, c.max_commits, c.max_rules), (10, 100, 10));
        assert!(c.validate().is_ok());
    }
}
