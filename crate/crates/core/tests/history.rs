use std::collections::{BTreeSet, HashMap, HashSet};

use cochange::history::{
    additional_changes, ancestors_all, ancestors_first_parent, branch_commits, branch_length,
    merge_base, merge_commit_size, strategy_walk,
};
use cochange::synth::fixtures::{self, id};
use cochange::synth::random_dag;
use cochange::{BranchHandlingStrategy as S, Commit, CommitGraph, CommitId, EntryOrigin, Error};
use proptest::prelude::*;

fn ids(labels: &[&str]) -> Vec<CommitId> {
    labels.iter().map(|l| id(l)).collect()
}

fn files(names: &[&str]) -> BTreeSet<cochange::FilePath> {
    names.iter().map(|n| (*n).into()).collect()
}

/// Reachability by fixpoint over the parent relation; independent of the
/// library's traversal code.
fn closure(graph: &CommitGraph) -> HashMap<CommitId, HashSet<CommitId>> {
    let mut reach: HashMap<CommitId, HashSet<CommitId>> = graph
        .topological()
        .map(|c| (c.id, HashSet::from([c.id])))
        .collect();
    loop {
        let mut changed = false;
        for c in graph.topological() {
            for p in &c.parents {
                if let Some(pr) = reach.get(p).cloned() {
                    let mine = reach.get_mut(&c.id).unwrap();
                    let before = mine.len();
                    mine.extend(pr);
                    changed |= mine.len() != before;
                }
            }
        }
        if !changed {
            return reach;
        }
    }
}

fn oracle_branch(graph: &CommitGraph, merge: CommitId) -> BTreeSet<CommitId> {
    let reach = closure(graph);
    let c = graph.get(&merge).unwrap();
    let (p1, p2) = (c.parents[0], c.parents[1]);
    reach[&p2]
        .difference(&reach[&p1])
        .filter(|x| !graph.get(x).unwrap().is_merge())
        .copied()
        .collect()
}

#[test]
fn first_parent_walk_of_side_branch_fixture() {
    let g = fixtures::side_branch(false);
    assert_eq!(
        ancestors_first_parent(&g, id("H")).unwrap(),
        ids(&["H", "E", "C", "A"])
    );
}

#[test]
fn first_parent_walk_of_single_root() {
    let g = fixtures::linear(1);
    assert_eq!(ancestors_first_parent(&g, id("L0")).unwrap(), ids(&["L0"]));
}

#[test]
fn walks_reject_unknown_start() {
    let g = fixtures::linear(3);
    assert!(matches!(
        ancestors_first_parent(&g, id("nope")),
        Err(Error::UnknownCommit(_))
    ));
    assert!(ancestors_all(&g, id("nope")).is_err());
    assert!(strategy_walk(&g, id("nope"), S::Full).is_err());
}

#[test]
fn all_ancestors_of_side_branch_fixture() {
    let g = fixtures::side_branch(false);
    assert_eq!(
        ancestors_all(&g, id("H")).unwrap(),
        ids(&["H", "E", "D", "C", "B", "A"])
    );
}

#[test]
fn boundary_parents_end_traversal() {
    let ghost = id("ghost");
    let commits = vec![
        Commit::new(id("S1"), vec![ghost], 1, ["a"]),
        Commit::new(id("S2"), vec![id("S1")], 2, ["b"]),
    ];
    let g = CommitGraph::new(commits, id("S2"), [ghost]).unwrap();
    assert_eq!(ancestors_first_parent(&g, id("S2")).unwrap(), ids(&["S2", "S1"]));
    assert_eq!(ancestors_first_parent(&g, id("S1")).unwrap(), ids(&["S1"]));
    assert_eq!(ancestors_all(&g, id("S2")).unwrap(), ids(&["S2", "S1"]));
    assert!(g.is_truncated(g.get(&id("S1")).unwrap()));
}

#[test]
fn unresolved_parent_without_boundary_is_rejected() {
    let commits = vec![Commit::new(id("S1"), vec![id("ghost")], 1, ["a"])];
    assert!(CommitGraph::new(commits, id("S1"), []).is_err());
}

#[test]
fn cycles_and_duplicate_parents_are_rejected() {
    let cyc = vec![
        Commit::new(id("X"), vec![id("Y")], 1, ["a"]),
        Commit::new(id("Y"), vec![id("X")], 2, ["a"]),
    ];
    assert!(CommitGraph::new(cyc, id("Y"), []).is_err());
    let dup = vec![
        Commit::new(id("X"), vec![], 1, ["a"]),
        Commit::new(id("Y"), vec![id("X"), id("X")], 2, ["a"]),
    ];
    assert!(CommitGraph::new(dup, id("Y"), []).is_err());
}

#[test]
fn additional_changes_cases() {
    assert!(additional_changes(&fixtures::side_branch(false), id("E"))
        .unwrap()
        .is_empty());
    assert_eq!(
        additional_changes(&fixtures::side_branch(true), id("E")).unwrap(),
        files(&["conf.xml"])
    );
    assert!(matches!(
        additional_changes(&fixtures::side_branch(false), id("C")),
        Err(Error::NotAMerge(_))
    ));
}

#[test]
fn octopus_file_matching_only_third_parent_is_not_additional() {
    let commits = vec![
        Commit::new(id("R"), vec![], 1, ["f", "g"]),
        Commit::new(id("P1"), vec![id("R")], 2, ["x"]),
        Commit::new(id("P2"), vec![id("R")], 3, ["f"]),
        Commit::new(id("P3"), vec![id("R")], 4, ["f", "g"]),
        Commit::new(id("O"), vec![id("P1"), id("P2"), id("P3")], 5, Vec::<&str>::new())
            .with_parent_equality("f", vec![false, false, true])
            .with_parent_equality("g", vec![false, false, false]),
    ];
    let g = CommitGraph::new(commits, id("O"), []).unwrap();
    assert_eq!(additional_changes(&g, id("O")).unwrap(), files(&["g"]));
}

#[test]
fn first_parent_merge_walk_takes_full_merge_diff() {
    let g = fixtures::side_branch(false);
    let walk = strategy_walk(&g, id("H"), S::FirstParentMerge).unwrap();
    let got: Vec<_> = walk.iter().map(|e| e.commit_id).collect();
    assert_eq!(got, ids(&["H", "E", "C", "A"]));
    assert_eq!(walk[1].files, files(&["b1.rs", "b2.rs", "b3.rs"]));
    assert_eq!(walk[1].origin, EntryOrigin::MergeFullDiff);
}

#[test]
fn full_walk_skips_clean_merge() {
    let g = fixtures::side_branch(false);
    let got: Vec<_> = strategy_walk(&g, id("H"), S::Full)
        .unwrap()
        .iter()
        .map(|e| e.commit_id)
        .collect();
    assert_eq!(got, ids(&["H", "D", "C", "B", "A"]));
}

#[test]
fn merges_with_additional_changes_contribute_only_those_files() {
    let g = fixtures::side_branch(true);
    for strategy in [S::Full, S::FirstParentNoMerge] {
        let walk = strategy_walk(&g, id("H"), strategy).unwrap();
        let e = walk.iter().find(|e| e.commit_id == id("E")).expect("merge kept");
        assert_eq!(e.files, files(&["conf.xml"]));
        assert_eq!(e.origin, EntryOrigin::MergeAdditionalOnly);
    }
    let fp = strategy_walk(&g, id("H"), S::FirstParentMerge).unwrap();
    assert_eq!(fp[1].files, files(&["b1.rs", "b2.rs", "b3.rs", "conf.xml"]));
}

#[test]
fn first_parent_no_merge_omits_branch_and_clean_merge() {
    let g = fixtures::side_branch(false);
    let got: Vec<_> = strategy_walk(&g, id("H"), S::FirstParentNoMerge)
        .unwrap()
        .iter()
        .map(|e| e.commit_id)
        .collect();
    assert_eq!(got, ids(&["H", "C", "A"]));
}

#[test]
fn linear_history_strategies_coincide() {
    let g = fixtures::linear(12);
    let head = g.head();
    let full = strategy_walk(&g, head, S::Full).unwrap();
    assert_eq!(full, strategy_walk(&g, head, S::FirstParentNoMerge).unwrap());
    assert_eq!(full, strategy_walk(&g, head, S::FirstParentMerge).unwrap());
    assert_eq!(ancestors_all(&g, head).unwrap(), ancestors_first_parent(&g, head).unwrap());
}

#[test]
fn merge_base_of_branch_length_example() {
    let g = fixtures::branch_length_example(false);
    assert_eq!(merge_base(&g, id("E"), id("G")).unwrap(), Some(id("C")));
    assert_eq!(merge_base(&g, id("D"), id("B")).unwrap(), Some(id("A")));
    assert_eq!(merge_base(&g, id("G"), id("G")).unwrap(), Some(id("G")));
}

#[test]
fn merge_base_of_disjoint_roots_is_none() {
    let commits = vec![
        Commit::new(id("R1"), vec![], 1, ["a"]),
        Commit::new(id("R2"), vec![], 2, ["b"]),
        Commit::new(id("M"), vec![id("R1"), id("R2")], 3, ["b"]),
    ];
    let g = CommitGraph::new(commits, id("M"), []).unwrap();
    assert_eq!(merge_base(&g, id("R1"), id("R2")).unwrap(), None);
    let bc = branch_commits(&g, id("M")).unwrap();
    assert!(bc.is_disjoint() && bc.commits.is_empty());
}

#[test]
fn criss_cross_merge_base_prefers_greater_id() {
    let commits = vec![
        Commit::new(id("R"), vec![], 1, ["a"]),
        Commit::new(id("X1"), vec![id("R")], 2, ["b"]),
        Commit::new(id("X2"), vec![id("R")], 3, ["c"]),
        Commit::new(id("M1"), vec![id("X1"), id("X2")], 4, ["c"]),
        Commit::new(id("M2"), vec![id("X2"), id("X1")], 5, ["b"]),
        Commit::new(id("T"), vec![id("M1"), id("M2")], 6, ["b"]),
    ];
    let g = CommitGraph::new(commits, id("T"), []).unwrap();
    assert_eq!(merge_base(&g, id("M1"), id("M2")).unwrap(), Some(id("X2")));
}

#[test]
fn branch_commits_of_branch_length_example() {
    let g = fixtures::branch_length_example(false);
    let bc = branch_commits(&g, id("H")).unwrap();
    assert_eq!(bc.commits, ids(&["G", "D", "B"]).into_iter().collect());
    assert_eq!(bc.merge_base, Some(id("C")));
    assert_eq!(branch_length(&g, id("H")).unwrap(), 3);
    assert_eq!(branch_length(&g, id("F")).unwrap(), 1);
}

#[test]
fn degenerate_merge_has_empty_branch() {
    let commits = vec![
        Commit::new(id("A"), vec![], 1, ["a"]),
        Commit::new(id("B"), vec![id("A")], 2, ["b"]),
        Commit::new(id("M"), vec![id("B"), id("A")], 3, Vec::<&str>::new()),
    ];
    let g = CommitGraph::new(commits, id("M"), []).unwrap();
    assert_eq!(branch_length(&g, id("M")).unwrap(), 0);
    assert_eq!(merge_commit_size(&g, id("M")).unwrap(), 0);
}

#[test]
fn branch_commits_rejects_non_merge() {
    let g = fixtures::branch_length_example(false);
    assert!(matches!(branch_commits(&g, id("G")), Err(Error::NotAMerge(_))));
    assert!(matches!(merge_commit_size(&g, id("G")), Err(Error::NotAMerge(_))));
}

#[test]
fn nested_fixture_matches_reachability_oracle() {
    let g = fixtures::nested_merges();
    for m in ["X", "Y", "S"] {
        let got = branch_commits(&g, id(m)).unwrap().commits;
        assert_eq!(got, oracle_branch(&g, id(m)), "merge {m}");
    }
    assert_eq!(
        branch_commits(&g, id("X")).unwrap().commits,
        ids(&["P", "Q", "V"]).into_iter().collect()
    );
    assert_eq!(
        branch_commits(&g, id("Y")).unwrap().commits,
        ids(&["T", "U"]).into_iter().collect()
    );
}

#[test]
fn merge_commit_sizes() {
    assert_eq!(merge_commit_size(&fixtures::branch_length_example(false), id("H")).unwrap(), 3);
    assert_eq!(merge_commit_size(&fixtures::branch_length_example(true), id("H")).unwrap(), 4);
}

#[test]
fn first_parent_merge_entry_is_branch_union_plus_additional() {
    for conflict in [false, true] {
        let g = fixtures::branch_length_example(conflict);
        let walk = strategy_walk(&g, id("H"), S::FirstParentMerge).unwrap();
        let mut expected: BTreeSet<_> = branch_commits(&g, id("H"))
            .unwrap()
            .commits
            .iter()
            .flat_map(|c| g.get(c).unwrap().changeset.iter().cloned())
            .collect();
        expected.extend(additional_changes(&g, id("H")).unwrap());
        assert_eq!(walk[0].files, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_dags_agree_with_oracles(seed in any::<u64>(), n in 1usize..=20) {
        let g = random_dag(seed, n, 6);
        let head = g.head();
        let all = ancestors_all(&g, head).unwrap();
        let fp = ancestors_first_parent(&g, head).unwrap();

        // first-parent chain is a subsequence of the full walk
        let mut it = all.iter();
        prop_assert!(fp.iter().all(|x| it.any(|y| y == x)));

        // each commit once, before all of its parents
        let pos: HashMap<_, _> = all.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        prop_assert_eq!(pos.len(), all.len());
        let reach = closure(&g);
        prop_assert_eq!(reach[&head].len(), all.len());
        for c in &all {
            for p in &g.get(c).unwrap().parents {
                prop_assert!(pos[c] < pos[p]);
            }
        }

        for c in g.topological().filter(|c| c.is_merge()) {
            let bc = branch_commits(&g, c.id).unwrap();
            prop_assert!(!bc.commits.contains(&c.id));
            prop_assert!(bc.commits.iter().all(|x| !g.get(x).unwrap().is_merge()));
            let expected = if bc.is_disjoint() { BTreeSet::new() } else { oracle_branch(&g, c.id) };
            prop_assert_eq!(&bc.commits, &expected);
            let chain: HashSet<_> = ancestors_first_parent(&g, c.id).unwrap().into_iter().collect();
            prop_assert!(bc.commits.iter().all(|x| !chain.contains(x)));
        }

        // determinism
        prop_assert_eq!(&all, &ancestors_all(&g, head).unwrap());
        for s in S::ALL {
            prop_assert_eq!(strategy_walk(&g, head, s).unwrap(), strategy_walk(&g, head, s).unwrap());
        }
    }

    #[test]
    fn merge_base_is_a_deepest_common_ancestor(seed in any::<u64>(), n in 2usize..=20) {
        let g = random_dag(seed, n, 3);
        let reach = closure(&g);
        let all: Vec<_> = g.topological().map(|c| c.id).collect();
        let (a, b) = (all[n / 2], all[n - 1]);
        let common: Vec<_> = reach[&a].intersection(&reach[&b]).copied().collect();
        match merge_base(&g, a, b).unwrap() {
            None => prop_assert!(common.is_empty()),
            Some(m) => {
                prop_assert!(common.contains(&m));
                // no common ancestor strictly below-descends from m
                for x in &common {
                    prop_assert!(*x == m || !reach[x].contains(&m));
                }
            }
        }
    }
}
