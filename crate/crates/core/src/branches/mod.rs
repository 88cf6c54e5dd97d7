//! Branch characteristics versus recommendation outcomes, and the
//! co-change precision study against future commits.

pub mod output;

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{PairedVerdict, TestCase};
use crate::history::merge::reachable;
use crate::history::{
    additional_changes, ancestors_first_parent, branch_commits, BranchHandlingStrategy,
    CommitGraph, CommitId, FilePath,
};
use crate::rational::{ratio, Rational};
use crate::recommend::{collect_commits, Query, RecommenderConfig};
use crate::rules::TransactionDatabase;

/// Future commits examined per merge by default.
pub const DEFAULT_HORIZON: usize = 100;
/// Default lower bound on the number of causing merges for the multi-cause
/// cohort.
pub const DEFAULT_MANY_CAUSES: usize = 6;
/// Default cap on the first-parent collection size.
pub const DEFAULT_COMMIT_CAP: usize = 53;
pub const DEFAULT_MIN_ADDED_COCHANGES: usize = 7;
pub const DEFAULT_SAMPLE_SIZE: usize = 40;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BranchInfo {
    pub merge: CommitId,
    pub merge_base: Option<CommitId>,
    pub branch_commit_ids: BTreeSet<CommitId>,
    pub branch_length: usize,
    pub merge_size: usize,
    pub has_additional_changes: bool,
}

pub fn branch_info(graph: &CommitGraph, merge: CommitId) -> Result<BranchInfo> {
    let bc = branch_commits(graph, merge)?;
    Ok(BranchInfo {
        merge,
        merge_base: bc.merge_base,
        branch_length: bc.commits.len(),
        branch_commit_ids: bc.commits,
        merge_size: graph.commit(&merge)?.changeset.len(),
        has_additional_changes: !additional_changes(graph, merge)?.is_empty(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CausalDiagnosis {
    pub test_case: TestCase,
    pub causing_merges: BTreeSet<CommitId>,
    pub max_branch_length: usize,
    pub max_merge_size: usize,
    pub n_causing: usize,
}

/// Everything a merge brings in beyond its first parent, nested merges
/// included, the merge itself excluded.
fn brought_in(graph: &CommitGraph, merge: CommitId) -> HashSet<CommitId> {
    let c = graph.get(&merge).expect("known merge");
    let Some(first) = c.first_parent() else {
        return HashSet::new();
    };
    let mainline = reachable(graph, first);
    let mut out = HashSet::new();
    for p in c.parents.iter().skip(1) {
        out.extend(reachable(graph, *p).into_iter().filter(|id| !mainline.contains(id)));
    }
    out
}

fn sources(db: &TransactionDatabase) -> HashSet<CommitId> {
    db.transactions().iter().map(|t| t.source_commit).collect()
}

/// Finds the mainline merges responsible for the two strategies collecting
/// different changesets for `test_case`.
///
/// A mainline merge up to the test commit is a cause when the merge-entry strategy
/// collected the merge itself, or the full-history strategy collected
/// something the merge brought in. `None` when both collections are equal.
pub fn diagnose_causes(
    graph: &CommitGraph,
    test_case: &TestCase,
    strategies: (BranchHandlingStrategy, BranchHandlingStrategy),
    config: &RecommenderConfig,
) -> Result<Option<CausalDiagnosis>> {
    let query = Query::new(test_case.query.iter().cloned(), test_case.commit)?;
    let db_a = collect_commits(graph, &query, strategies.0, config)?;
    let db_b = collect_commits(graph, &query, strategies.1, config)?;
    if db_a == db_b {
        return Ok(None);
    }
    let sides = [(strategies.0, sources(&db_a)), (strategies.1, sources(&db_b))];

    let mut causing = BTreeSet::new();
    let (mut max_len, mut max_size) = (0, 0);
    for id in ancestors_first_parent(graph, test_case.commit)? {
        let c = graph.commit(&id)?;
        // a merge test commit counts too: its branch precedes it in history
        if !c.is_merge() {
            continue;
        }
        let inner = brought_in(graph, id);
        let hit = sides.iter().any(|(s, src)| match s {
            BranchHandlingStrategy::FirstParentMerge => src.contains(&id),
            BranchHandlingStrategy::Full => inner.iter().any(|x| src.contains(x)),
            BranchHandlingStrategy::FirstParentNoMerge => false,
        });
        if hit {
            let info = branch_info(graph, id)?;
            max_len = max_len.max(info.branch_length);
            max_size = max_size.max(info.merge_size);
            causing.insert(id);
        }
    }
    Ok(Some(CausalDiagnosis {
        test_case: test_case.clone(),
        n_causing: causing.len(),
        causing_merges: causing,
        max_branch_length: max_len,
        max_merge_size: max_size,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characteristic {
    BranchLength,
    MergeSize,
}

impl Characteristic {
    pub fn name(self) -> &'static str {
        match self {
            Characteristic::BranchLength => "branch_length",
            Characteristic::MergeSize => "merge_size",
        }
    }

    fn of(self, d: &CausalDiagnosis) -> usize {
        match self {
            Characteristic::BranchLength => d.max_branch_length,
            Characteristic::MergeSize => d.max_merge_size,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cohort {
    /// Cases caused by exactly one merge.
    Single,
    /// Cases caused by at least this many merges; split at the median.
    AtLeast(usize),
}

impl Cohort {
    fn admits(self, n_causing: usize) -> bool {
        match self {
            Cohort::Single => n_causing == 1,
            Cohort::AtLeast(k) => n_causing >= k,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BinRow {
    pub bin_low: usize,
    pub bin_high: usize,
    pub wins_a: usize,
    pub wins_b: usize,
    pub draws: usize,
    pub n: usize,
}

impl BinRow {
    /// Win rates with draws left out; `None` for an all-draw bin.
    pub fn decided_rates(&self) -> Option<(Rational, Rational)> {
        let decided = self.wins_a + self.wins_b;
        (decided > 0).then(|| (ratio(self.wins_a, decided), ratio(self.wins_b, decided)))
    }

    pub fn draw_rate(&self) -> Rational {
        ratio(self.draws, self.n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WinnerRateTable {
    pub characteristic: Characteristic,
    pub cohort: Cohort,
    pub rows: Vec<BinRow>,
}

/// Splits `n` sorted items into `bins` consecutive runs whose sizes differ by
/// at most one, larger runs first.
fn equal_frequency(n: usize, bins: usize) -> Vec<std::ops::Range<usize>> {
    let bins = bins.min(n).max(1);
    let (base, extra) = (n / bins, n % bins);
    let mut start = 0;
    (0..bins)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .filter(|r| !r.is_empty())
        .collect()
}

/// Win/draw counts per equal-frequency bin of the characteristic. The
/// multi-cause cohort always uses two bins (a median split); `bins` applies
/// to the single-cause cohort.
pub fn winner_rate_table(
    cases: &[(CausalDiagnosis, PairedVerdict)],
    characteristic: Characteristic,
    cohort: Cohort,
    bins: usize,
) -> WinnerRateTable {
    let mut values: Vec<(usize, PairedVerdict)> = cases
        .iter()
        .filter(|(d, _)| cohort.admits(d.n_causing))
        .map(|(d, v)| (characteristic.of(d), *v))
        .collect();
    values.sort_by_key(|(x, _)| *x);
    let bins = match cohort {
        Cohort::Single => bins,
        Cohort::AtLeast(_) => 2,
    };
    let rows = equal_frequency(values.len(), bins)
        .into_iter()
        .map(|r| {
            let slice = &values[r];
            let count = |v: PairedVerdict| slice.iter().filter(|(_, x)| *x == v).count();
            BinRow {
                bin_low: slice.first().map_or(0, |x| x.0),
                bin_high: slice.last().map_or(0, |x| x.0),
                wins_a: count(PairedVerdict::WinA),
                wins_b: count(PairedVerdict::WinB),
                draws: count(PairedVerdict::Draw),
                n: slice.len(),
            }
        })
        .collect();
    WinnerRateTable { characteristic, cohort, rows }
}

/// Median of the values as an exact rational; `None` for no values.
pub fn median(values: &[usize]) -> Option<Rational> {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(ratio(v[n / 2], 1)),
        _ => Some(ratio(v[n / 2 - 1] + v[n / 2], 2)),
    }
}

/// Third quartile by linear interpolation between order statistics.
pub fn third_quartile(values: &[usize]) -> Option<Rational> {
    let mut v = values.to_vec();
    v.sort_unstable();
    if v.is_empty() {
        return None;
    }
    // position 3(n-1)/4, split into integer part and quarter fraction
    let q = 3 * (v.len() - 1);
    let (lo, frac) = (q / 4, q % 4);
    let base = Rational::from_integer(v[lo] as i64);
    if frac == 0 {
        return Some(base);
    }
    let step = Rational::from_integer(v[lo + 1] as i64 - v[lo] as i64);
    Some(base + step * ratio(frac, 4))
}

/// Size of the first-parent-with-merges collection for each case.
pub fn first_parent_collection_sizes(
    test_cases: &[TestCase],
    graph: &CommitGraph,
    config: &RecommenderConfig,
) -> Result<Vec<usize>> {
    test_cases
        .iter()
        .map(|tc| {
            let q = Query::new(tc.query.iter().cloned(), tc.commit)?;
            Ok(collect_commits(graph, &q, BranchHandlingStrategy::FirstParentMerge, config)?.len())
        })
        .collect()
}

/// Keeps cases whose first-parent collection holds at most `cap`
/// transactions; `None` keeps everything.
pub fn commit_cap_filter(
    test_cases: Vec<TestCase>,
    graph: &CommitGraph,
    config: &RecommenderConfig,
    cap: Option<usize>,
) -> Result<Vec<TestCase>> {
    let Some(cap) = cap else {
        return Ok(test_cases);
    };
    let sizes = first_parent_collection_sizes(&test_cases, graph, config)?;
    Ok(test_cases
        .into_iter()
        .zip(sizes)
        .filter(|(_, n)| *n <= cap)
        .map(|(tc, _)| tc)
        .collect())
}

fn branch_union(graph: &CommitGraph, info: &BranchInfo) -> BTreeSet<FilePath> {
    info.branch_commit_ids
        .iter()
        .filter_map(|id| graph.get(id))
        .flat_map(|c| c.changeset.iter().cloned())
        .collect()
}

/// Mainline merges whose branch makes a difference to extraction: trivial
/// merges of at most one commit that replay exactly that commit's files are
/// left out.
pub fn eligible_merges_for_cochange(graph: &CommitGraph) -> Result<Vec<CommitId>> {
    let mut out = Vec::new();
    for id in ancestors_first_parent(graph, graph.head())? {
        let c = graph.commit(&id)?;
        if !c.is_merge() {
            continue;
        }
        let info = branch_info(graph, id)?;
        if info.branch_length <= 1 && branch_union(graph, &info) == c.changeset {
            continue;
        }
        out.push(id);
    }
    Ok(out)
}

/// Files that changed together with `target` in any of the changesets.
pub fn cochanged_files<'a, I>(changesets: I, target: &FilePath) -> BTreeSet<FilePath>
where
    I: IntoIterator<Item = &'a BTreeSet<FilePath>>,
{
    changesets
        .into_iter()
        .filter(|cs| cs.contains(target))
        .flat_map(|cs| cs.iter().filter(|f| *f != target).cloned())
        .collect()
}

/// Descendants of `merge`, nearest first: breadth-first over child edges,
/// ties by timestamp then id, at most `horizon` commits.
pub fn future_commits(graph: &CommitGraph, merge: CommitId, horizon: usize) -> Result<Vec<CommitId>> {
    graph.commit(&merge)?;
    let mut dist: BTreeMap<CommitId, usize> = BTreeMap::new();
    let mut queue = VecDeque::from([(merge, 0usize)]);
    let mut seen = HashSet::from([merge]);
    while let Some((id, d)) = queue.pop_front() {
        for child in graph.children(&id) {
            if seen.insert(*child) {
                dist.insert(*child, d + 1);
                queue.push_back((*child, d + 1));
            }
        }
    }
    let mut order: Vec<(usize, i64, CommitId)> = dist
        .into_iter()
        .map(|(id, d)| (d, graph.get(&id).expect("child exists").author_timestamp, id))
        .collect();
    order.sort();
    Ok(order.into_iter().take(horizon).map(|(_, _, id)| id).collect())
}

/// Files that changed with `target` in the nearest `horizon` descendants of
/// `merge`.
pub fn future_oracle(
    graph: &CommitGraph,
    merge: CommitId,
    target: &FilePath,
    horizon: usize,
) -> Result<BTreeSet<FilePath>> {
    let future = future_commits(graph, merge, horizon)?;
    Ok(cochanged_files(
        future.iter().filter_map(|id| graph.get(id)).map(|c| &c.changeset),
        target,
    ))
}

/// `|changed ∩ oracle| / |changed|`.
pub fn precision(changed: &BTreeSet<FilePath>, oracle: &BTreeSet<FilePath>) -> Result<Rational> {
    if changed.is_empty() {
        return Err(Error::Undefined("precision"));
    }
    Ok(ratio(changed.intersection(oracle).count(), changed.len()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionMode {
    FromBranch,
    FromMerge,
}

impl PrecisionMode {
    pub fn name(self) -> &'static str {
        match self {
            PrecisionMode::FromBranch => "from_branch",
            PrecisionMode::FromMerge => "from_merge",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrecisionRecord {
    pub merge: CommitId,
    pub mode: PrecisionMode,
    #[serde(serialize_with = "exact_map")]
    pub per_file_precision: BTreeMap<FilePath, Rational>,
    #[serde(with = "crate::rational::serde_exact")]
    pub mean_precision: Rational,
}

fn exact_map<S: serde::Serializer>(
    map: &BTreeMap<FilePath, Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    #[derive(Serialize)]
    struct Exact<'a>(#[serde(with = "crate::rational::serde_exact")] &'a Rational);
    let mut m = s.serialize_map(Some(map.len()))?;
    for (k, v) in map {
        m.serialize_entry(k, &Exact(v))?;
    }
    m.end()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CochangeDiagnostics {
    pub eligible_merges: usize,
    /// Merges skipped because nothing descends from them.
    pub merges_without_future: usize,
    /// (merge, file, mode) triples whose change set was empty.
    pub undefined_precisions: usize,
    /// Merge/mode combinations where every file was undefined.
    pub empty_records: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CochangeRow {
    pub branch: BranchInfo,
    pub records: Vec<PrecisionRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CochangeStudy {
    pub horizon: usize,
    pub rows: Vec<CochangeRow>,
    pub diagnostics: CochangeDiagnostics,
}

/// Precision of co-changes seen at each eligible merge, taken either from
/// the merge's single changeset or from the branch's individual commits,
/// against what actually changes together in the merge's future.
pub fn cochange_study(graph: &CommitGraph, horizon: usize) -> Result<CochangeStudy> {
    let merges = eligible_merges_for_cochange(graph)?;
    let mut diagnostics = CochangeDiagnostics {
        eligible_merges: merges.len(),
        ..Default::default()
    };
    let mut rows = Vec::new();
    for merge in merges {
        if graph.children(&merge).is_empty() {
            diagnostics.merges_without_future += 1;
            continue;
        }
        let info = branch_info(graph, merge)?;
        let merge_cs = &graph.commit(&merge)?.changeset;
        let branch_cs: Vec<&BTreeSet<FilePath>> = info
            .branch_commit_ids
            .iter()
            .filter_map(|id| graph.get(id))
            .map(|c| &c.changeset)
            .collect();
        let files: BTreeSet<FilePath> = merge_cs
            .iter()
            .chain(branch_cs.iter().flat_map(|cs| cs.iter()))
            .cloned()
            .collect();
        let oracles: BTreeMap<&FilePath, BTreeSet<FilePath>> = files
            .iter()
            .map(|f| Ok((f, future_oracle(graph, merge, f, horizon)?)))
            .collect::<Result<_>>()?;

        let mut records = Vec::new();
        for mode in [PrecisionMode::FromBranch, PrecisionMode::FromMerge] {
            let mut per_file = BTreeMap::new();
            for f in &files {
                let changed = match mode {
                    PrecisionMode::FromMerge => cochanged_files([merge_cs], f),
                    PrecisionMode::FromBranch => cochanged_files(branch_cs.iter().copied(), f),
                };
                match precision(&changed, &oracles[f]) {
                    Ok(p) => {
                        per_file.insert(f.clone(), p);
                    }
                    Err(_) => diagnostics.undefined_precisions += 1,
                }
            }
            if per_file.is_empty() {
                diagnostics.empty_records += 1;
                continue;
            }
            let mean = per_file.values().sum::<Rational>() / Rational::from_integer(per_file.len() as i64);
            records.push(PrecisionRecord { merge, mode, per_file_precision: per_file, mean_precision: mean });
        }
        rows.push(CochangeRow { branch: info, records });
    }
    Ok(CochangeStudy { horizon, rows, diagnostics })
}

fn pairs(cs: &BTreeSet<FilePath>) -> BTreeSet<(FilePath, FilePath)> {
    let v: Vec<&FilePath> = cs.iter().collect();
    let mut out = BTreeSet::new();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            out.insert((v[i].clone(), v[j].clone()));
        }
    }
    out
}

/// File pairs that co-change in the merge's changeset but in none of its
/// branch commits.
pub fn added_cochanges(graph: &CommitGraph, merge: CommitId) -> Result<usize> {
    let info = branch_info(graph, merge)?;
    let mut branch_pairs = BTreeSet::new();
    for id in &info.branch_commit_ids {
        branch_pairs.extend(pairs(&graph.commit(id)?.changeset));
    }
    let merge_pairs = pairs(&graph.commit(&merge)?.changeset);
    Ok(merge_pairs.difference(&branch_pairs).count())
}

/// Up to `n` eligible merges that add at least `min_added` co-change pairs,
/// drawn uniformly with a seeded generator and returned in history order
/// (newest first).
pub fn sample_heavy_merges(
    graph: &CommitGraph,
    min_added: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<CommitId>> {
    let mut heavy = Vec::new();
    for merge in eligible_merges_for_cochange(graph)? {
        if added_cochanges(graph, merge)? >= min_added {
            heavy.push(merge);
        }
    }
    if heavy.len() <= n {
        return Ok(heavy);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = (0..heavy.len()).collect::<Vec<_>>();
    picked.shuffle(&mut rng);
    picked.truncate(n);
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| heavy[i]).collect())
}
