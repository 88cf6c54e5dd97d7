//! Synthetic histories for tests, benchmarks and fixture-scale studies.
//!
//! [`generate`] produces a mainline with feature branches merged back
//! through `--no-ff` style merge commits. Files are grouped into clusters
//! that tend to change together, so the mined rules have a ground truth.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::history::{Commit, CommitGraph, CommitId, FilePath};

/// Readable fixture id: the label's bytes, hex-encoded and left-padded
/// with zeros. Ids of equal-length labels sort like the labels.
pub fn label_id(label: &str) -> CommitId {
    assert!(label.len() <= 20, "label too long for a commit id");
    let mut bytes = [0u8; 20];
    bytes[20 - label.len()..].copy_from_slice(label.as_bytes());
    CommitId::from_bytes(bytes)
}

fn counter_id(n: u64) -> CommitId {
    let mut bytes = [0u8; 20];
    bytes[0] = 0xc0;
    bytes[12..].copy_from_slice(&n.to_be_bytes());
    CommitId::from_bytes(bytes)
}

#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub seed: u64,
    /// Total commits to emit (mainline, branch and merge commits).
    pub total_commits: usize,
    pub clusters: usize,
    pub cluster_size: usize,
    /// Chance that a mainline step opens a branch instead of committing.
    pub branch_probability: f64,
    pub branch_length: (usize, usize),
    /// Mainline commits interleaved while a branch is open.
    pub mainline_while_open: (usize, usize),
    /// Every branch commit picks a fresh cluster instead of sticking to one.
    pub unrelated_branch_changes: bool,
    /// Chance that a merge introduces one extra file of its own.
    pub conflict_probability: f64,
    /// Chance that a commit also touches one random file outside its cluster.
    pub noise_probability: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            total_commits: 300,
            clusters: 12,
            cluster_size: 4,
            branch_probability: 0.15,
            branch_length: (1, 6),
            mainline_while_open: (0, 3),
            unrelated_branch_changes: false,
            conflict_probability: 0.1,
            noise_probability: 0.1,
        }
    }
}

struct Builder {
    rng: ChaCha8Rng,
    cfg: SyntheticConfig,
    commits: Vec<Commit>,
    clock: i64,
    next_id: u64,
}

impl Builder {
    fn file(&self, cluster: usize, member: usize) -> FilePath {
        FilePath::new(format!("mod{cluster:02}/file{member}.rs")).expect("valid path")
    }

    fn change(&mut self, cluster: usize) -> BTreeSet<FilePath> {
        let size = self.cfg.cluster_size.max(1);
        let k = self.rng.gen_range(size.min(2)..=size);
        let mut members: Vec<usize> = (0..size).collect();
        members.shuffle(&mut self.rng);
        let mut files: BTreeSet<FilePath> =
            members[..k].iter().map(|&m| self.file(cluster, m)).collect();
        if self.rng.gen_bool(self.cfg.noise_probability) {
            let c = self.rng.gen_range(0..self.cfg.clusters);
            let m = self.rng.gen_range(0..size);
            files.insert(self.file(c, m));
        }
        files
    }

    fn emit(&mut self, parents: Vec<CommitId>, files: BTreeSet<FilePath>) -> CommitId {
        self.clock += 60 * self.rng.gen_range(1..=90);
        self.next_id += 1;
        let id = counter_id(self.next_id);
        self.commits
            .push(Commit::new(id, parents, self.clock, files.into_iter()));
        id
    }
}

pub fn generate(cfg: &SyntheticConfig) -> CommitGraph {
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg: cfg.clone(),
        commits: Vec::new(),
        clock: 1_600_000_000,
        next_id: 0,
    };
    let root_files: BTreeSet<FilePath> = (0..cfg.clusters)
        .flat_map(|c| (0..cfg.cluster_size).map(move |m| (c, m)))
        .map(|(c, m)| b.file(c, m))
        .collect();
    let mut tip = b.emit(vec![], root_files);

    while b.commits.len() < cfg.total_commits {
        let remaining = cfg.total_commits - b.commits.len();
        if remaining >= 3 && b.rng.gen_bool(cfg.branch_probability) {
            let (lo, hi) = cfg.branch_length;
            let len = b.rng.gen_range(lo..=hi).min(remaining - 2).max(1);
            let (mlo, mhi) = cfg.mainline_while_open;
            let side = b.rng.gen_range(mlo..=mhi).min(remaining - 1 - len);

            // interleave branch and mainline commits in time
            let mut schedule: Vec<bool> = std::iter::repeat(true)
                .take(len)
                .chain(std::iter::repeat(false).take(side))
                .collect();
            schedule.shuffle(&mut b.rng);

            let home = b.rng.gen_range(0..cfg.clusters);
            let mut branch_tip = tip;
            let mut on_branch = BTreeSet::new();
            let mut on_main = BTreeSet::new();
            for is_branch in schedule {
                if is_branch {
                    let cluster = if cfg.unrelated_branch_changes {
                        b.rng.gen_range(0..cfg.clusters)
                    } else {
                        home
                    };
                    let files = b.change(cluster);
                    on_branch.extend(files.iter().cloned());
                    branch_tip = b.emit(vec![branch_tip], files);
                } else {
                    let cluster = b.rng.gen_range(0..cfg.clusters);
                    let files = b.change(cluster);
                    on_main.extend(files.iter().cloned());
                    tip = b.emit(vec![tip], files);
                }
            }

            // clean takes come from the branch; files touched on both sides
            // end up different from either parent
            let mut equality: BTreeMap<FilePath, Vec<bool>> = on_branch
                .iter()
                .map(|f| (f.clone(), vec![false, !on_main.contains(f)]))
                .collect();
            if b.rng.gen_bool(cfg.conflict_probability) {
                let c = b.rng.gen_range(0..cfg.clusters);
                let m = b.rng.gen_range(0..cfg.cluster_size);
                equality.insert(b.file(c, m), vec![false, false]);
            }
            let merge = b.emit(vec![tip, branch_tip], BTreeSet::new());
            let commit = b.commits.last_mut().expect("just emitted");
            debug_assert_eq!(commit.id, merge);
            for (f, flags) in equality {
                commit.changeset.insert(f.clone());
                commit.parent_equality.insert(f, flags);
            }
            tip = merge;
        } else {
            let cluster = b.rng.gen_range(0..cfg.clusters);
            let files = b.change(cluster);
            tip = b.emit(vec![tip], files);
        }
    }

    CommitGraph::new(b.commits, tip, []).expect("generator emits a valid graph")
}

/// Arbitrary small DAG for property tests: every commit picks one to three
/// distinct earlier commits as parents (fewer near the root).
pub fn random_dag(seed: u64, n: usize, files: usize) -> CommitGraph {
    assert!(n >= 1 && files >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths: Vec<FilePath> = (0..files)
        .map(|i| FilePath::new(format!("f{i}")).expect("valid path"))
        .collect();
    let mut commits: Vec<Commit> = Vec::with_capacity(n);
    for i in 0..n {
        let id = counter_id(i as u64 + 1);
        let mut parents = Vec::new();
        if i > 0 {
            let want = rng.gen_range(1..=3.min(i));
            let mut pool: Vec<usize> = (0..i).collect();
            pool.shuffle(&mut rng);
            // bias the first parent to the previous commit to get a mainline
            if rng.gen_bool(0.6) {
                parents.push(commits[i - 1].id);
            }
            for j in pool {
                if parents.len() >= want {
                    break;
                }
                let p = commits[j].id;
                if !parents.contains(&p) {
                    parents.push(p);
                }
            }
        }
        let k = rng.gen_range(0..=files.min(4));
        let chosen: BTreeSet<FilePath> = paths.choose_multiple(&mut rng, k).cloned().collect();
        let mut c = Commit::new(id, parents, 1_000 + rng.gen_range(0..(n as i64 * 2)), chosen);
        if c.is_merge() {
            let np = c.parents.len();
            for flags in c.parent_equality.values_mut() {
                for f in flags.iter_mut().skip(1) {
                    *f = rng.gen_bool(0.6);
                }
                debug_assert_eq!(flags.len(), np);
            }
        }
        commits.push(c);
    }
    let head = commits.last().expect("n >= 1").id;
    CommitGraph::new(commits, head, []).expect("random dag is valid")
}

/// Small hand-built histories with known answers.
pub mod fixtures {
    use super::label_id;
    use crate::history::{Commit, CommitGraph, CommitId};

    pub fn id(label: &str) -> CommitId {
        label_id(label)
    }

    fn c(label: &str, parents: &[&str], ts: i64, files: &[&str]) -> Commit {
        Commit::new(
            id(label),
            parents.iter().map(|p| id(p)).collect(),
            ts,
            files.iter().copied(),
        )
    }

    /// Mainline A-C-E-H with a side branch B-D merged at E.
    ///
    /// ```text
    /// A ── C ───── E ── H
    ///  \          /
    ///   B ─── D ─┘
    /// ```
    ///
    /// With `additional` the merge also edits `conf.xml` itself.
    pub fn side_branch(additional: bool) -> CommitGraph {
        let mut merge = c("E", &["C", "D"], 5, &["b1.rs", "b2.rs", "b3.rs"]);
        if additional {
            merge = merge.with_additional_changes(["conf.xml"]);
        }
        let commits = vec![
            c("A", &[], 1, &["x.rs", "y.rs"]),
            c("B", &["A"], 2, &["b1.rs", "b2.rs"]),
            c("C", &["A"], 3, &["c1.rs", "c2.rs"]),
            c("D", &["B"], 4, &["b2.rs", "b3.rs"]),
            merge,
            c("H", &["E"], 6, &["h.rs", "c1.rs"]),
        ];
        CommitGraph::new(commits, id("H"), []).expect("valid fixture")
    }

    /// The eight-commit branch length example: H merges the branch G-F-D
    /// whose merge base with mainline E is C; F itself merges B (base A).
    ///
    /// ```text
    /// A ── C ── E ───────── H
    /// |     \              /
    /// |      D ── F ── G ─┘
    ///  \         /
    ///   B ──────┘
    /// ```
    ///
    /// Branch commits change `f1` (B), `f2` (D) and `f3` (G). With
    /// `conflict` the merge H additionally rewrites `shared.cfg`.
    pub fn branch_length_example(conflict: bool) -> CommitGraph {
        let mut h = c("H", &["E", "G"], 8, &["f1", "f2", "f3"]);
        if conflict {
            h = h.with_additional_changes(["shared.cfg"]);
        }
        let commits = vec![
            c("A", &[], 1, &["a", "shared.cfg"]),
            c("B", &["A"], 2, &["f1"]),
            c("C", &["A"], 3, &["c"]),
            c("D", &["C"], 4, &["f2"]),
            c("E", &["C"], 5, &["e"]),
            c("F", &["D", "B"], 6, &["f1"]),
            c("G", &["F"], 7, &["f3"]),
            h,
        ];
        CommitGraph::new(commits, id("H"), []).expect("valid fixture")
    }

    /// Ten commits: the branch P-Q-S is merged at X, where S itself merged
    /// the sub-branch V; the branch then continues with T-U and is merged
    /// again at Y.
    ///
    /// ```text
    /// R ── M1 ──────────── X ─────────── Y
    ///  \                  /             /
    ///   P ── Q ───── S ──┴──── T ──── U
    ///         \     /
    ///          V ──┘
    /// ```
    pub fn nested_merges() -> CommitGraph {
        let commits = vec![
            c("R", &[], 1, &["r"]),
            c("P", &["R"], 2, &["p"]),
            c("M1", &["R"], 3, &["m"]),
            c("Q", &["P"], 4, &["q"]),
            c("V", &["Q"], 5, &["v"]),
            c("S", &["Q", "V"], 6, &["v"]),
            c("X", &["M1", "S"], 7, &["p", "q", "v"]),
            c("T", &["S"], 8, &["t"]),
            c("U", &["T"], 9, &["u"]),
            c("Y", &["X", "U"], 10, &["t", "u"]),
        ];
        CommitGraph::new(commits, id("Y"), []).expect("valid fixture")
    }

    /// Mainline M0..M4 around a two-commit branch B1-B2 that edits `a` and
    /// `x`, merged cleanly at J; the last commit T changes `{a, b, c}`.
    /// T's test cases are eligible under every strategy pair: the branch
    /// adds transactions that touch `a`, and at least five commits touch
    /// each query.
    ///
    /// ```text
    /// M0 ── M1 ── M2 ───── M3 ── J ── M4 ── T
    ///               \           /
    ///                B1 ── B2 ─┘
    /// ```
    pub fn eligible_commit() -> CommitGraph {
        let commits = vec![
            c("M0", &[], 1, &["a", "b"]),
            c("M1", &["M0"], 2, &["a", "b"]),
            c("M2", &["M1"], 3, &["a", "c"]),
            c("B1", &["M2"], 4, &["a", "x"]),
            c("B2", &["B1"], 5, &["a", "x"]),
            c("M3", &["M2"], 6, &["b", "c"]),
            c("J", &["M3", "B2"], 7, &["a", "x"]),
            c("M4", &["J"], 8, &["b"]),
            c("T", &["M4"], 9, &["a", "b", "c"]),
        ];
        CommitGraph::new(commits, id("T"), []).expect("valid fixture")
    }

    /// Like [`eligible_commit`] but so short that no strategy collects five
    /// transactions for T.
    pub fn sparse_history() -> CommitGraph {
        let commits = vec![
            c("M0", &[], 1, &["a", "b"]),
            c("B1", &["M0"], 2, &["a", "x"]),
            c("M1", &["M0"], 3, &["b", "c"]),
            c("J", &["M1", "B1"], 4, &["a", "x"]),
            c("T", &["J"], 5, &["a", "b", "c"]),
        ];
        CommitGraph::new(commits, id("T"), []).expect("valid fixture")
    }

    /// Scripted co-change history. J merges a branch that changed `{a, b}`
    /// and `{c, d}` separately; the future repeats those two pairs. J2 is a
    /// trivial one-commit merge; J3 merges the one-commit branch S2 `{h, i}`
    /// and adds `conflict.txt` itself, which F5 later changes together with
    /// `h`.
    ///
    /// ```text
    /// R ── M1 ── J ── F1 ── F2 ── F3 ── J2 ── F4 ── J3 ── F5
    ///  \        /            \         /  \         /
    ///   B1 ── B2              S1 ─────┘    S2 ─────┘
    /// ```
    pub fn cochange_history() -> CommitGraph {
        let commits = vec![
            c("R", &[], 1, &["base"]),
            c("M1", &["R"], 2, &["m"]),
            c("B1", &["R"], 3, &["a", "b"]),
            c("B2", &["B1"], 4, &["c", "d"]),
            c("J", &["M1", "B2"], 5, &["a", "b", "c", "d"]),
            c("F1", &["J"], 6, &["a", "b"]),
            c("F2", &["F1"], 7, &["c", "d"]),
            c("S1", &["F2"], 8, &["e"]),
            c("F3", &["F2"], 9, &["g"]),
            c("J2", &["F3", "S1"], 10, &["e"]),
            c("S2", &["J2"], 11, &["h", "i"]),
            c("F4", &["J2"], 12, &["k"]),
            c("J3", &["F4", "S2"], 13, &["h", "i"]).with_additional_changes(["conflict.txt"]),
            c("F5", &["J3"], 14, &["h", "conflict.txt"]),
        ];
        CommitGraph::new(commits, id("F5"), []).expect("valid fixture")
    }

    /// A merge of four single-file branch commits: the merge changeset
    /// `{w, x, y, z}` adds six co-change pairs the branch never had.
    pub fn heavy_merge() -> CommitGraph {
        let commits = vec![
            c("R", &[], 1, &["r"]),
            c("B1", &["R"], 2, &["w"]),
            c("B2", &["B1"], 3, &["x"]),
            c("B3", &["B2"], 4, &["y"]),
            c("B4", &["B3"], 5, &["z"]),
            c("M", &["R"], 6, &["m"]),
            c("J", &["M", "B4"], 7, &["w", "x", "y", "z"]),
            c("N", &["J"], 8, &["w", "n"]),
        ];
        CommitGraph::new(commits, id("N"), []).expect("valid fixture")
    }

    /// A linear history of `n` commits labelled `L0..`, each touching two
    /// rotating files.
    pub fn linear(n: usize) -> CommitGraph {
        assert!(n >= 1);
        let commits: Vec<Commit> = (0..n)
            .map(|i| {
                let label = format!("L{i}");
                let parent = (i > 0).then(|| id(&format!("L{}", i - 1)));
                let files = [format!("f{}", i % 5), format!("f{}", (i + 1) % 5)];
                Commit::new(
                    id(&label),
                    parent.into_iter().collect(),
                    i as i64 + 1,
                    files.iter().map(|f| f.as_str()),
                )
            })
            .collect();
        CommitGraph::new(commits, id(&format!("L{}", n - 1)), []).expect("valid fixture")
    }
}
