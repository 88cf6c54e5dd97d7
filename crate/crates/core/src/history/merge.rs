use std::collections::{BTreeSet, HashSet};

use super::{Commit, CommitGraph, CommitId, FilePath};
use crate::error::{Error, Result};

/// Files whose content at the merge differs from every parent, such as
/// conflict resolutions.
pub fn additional_changes(graph: &CommitGraph, merge: CommitId) -> Result<BTreeSet<FilePath>> {
    let c = graph.commit(&merge)?;
    if !c.is_merge() {
        return Err(Error::NotAMerge(merge));
    }
    Ok(additional_changes_of(c))
}

pub(crate) fn additional_changes_of(c: &Commit) -> BTreeSet<FilePath> {
    c.parent_equality
        .iter()
        .filter(|(_, flags)| flags.iter().all(|eq| !eq))
        .map(|(f, _)| f.clone())
        .collect()
}

pub(crate) fn reachable(graph: &CommitGraph, start: CommitId) -> HashSet<CommitId> {
    let mut seen = HashSet::new();
    if !graph.contains(&start) {
        return seen;
    }
    let mut stack = vec![start];
    seen.insert(start);
    while let Some(id) = stack.pop() {
        let c = graph.get(&id).expect("reachable commit exists");
        for p in graph.resolved_parents(c) {
            if seen.insert(p) {
                stack.push(p);
            }
        }
    }
    seen
}

/// Lowest common ancestor of `a` and `b`. With several candidates the one
/// with the greatest generation number wins, then the greater id.
pub fn merge_base(graph: &CommitGraph, a: CommitId, b: CommitId) -> Result<Option<CommitId>> {
    graph.commit(&a)?;
    graph.commit(&b)?;
    let from_a = reachable(graph, a);
    let from_b = reachable(graph, b);
    Ok(from_a
        .intersection(&from_b)
        .max_by_key(|id| (graph.generation(id), **id))
        .copied())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchCommits {
    pub merge_base: Option<CommitId>,
    /// Non-merge commits brought in by the merge.
    pub commits: BTreeSet<CommitId>,
}

impl BranchCommits {
    /// The merged side shares no history with the mainline.
    pub fn is_disjoint(&self) -> bool {
        self.merge_base.is_none()
    }
}

/// Non-merge commits attributable to the branch merged at `merge`.
///
/// The walk starts at the second parent and follows every parent edge until
/// it reaches history already reachable from the first parent (which
/// contains the merge base). Nested merges are expanded in place and are
/// not part of the result themselves.
pub fn branch_commits(graph: &CommitGraph, merge: CommitId) -> Result<BranchCommits> {
    let c = graph.commit(&merge)?;
    if !c.is_merge() {
        return Err(Error::NotAMerge(merge));
    }
    let (first, second) = (c.parents[0], c.parents[1]);
    if !graph.contains(&first) || !graph.contains(&second) {
        // a parent behind a shallow boundary: nothing to compare against
        return Ok(BranchCommits {
            merge_base: None,
            commits: BTreeSet::new(),
        });
    }
    let base = merge_base(graph, first, second)?;
    if base.is_none() {
        return Ok(BranchCommits {
            merge_base: None,
            commits: BTreeSet::new(),
        });
    }

    let mainline = reachable(graph, first);
    let mut commits = BTreeSet::new();
    let mut seen = HashSet::new();
    let mut stack = vec![second];
    while let Some(id) = stack.pop() {
        if mainline.contains(&id) || !seen.insert(id) {
            continue;
        }
        let bc = graph.get(&id).expect("resolved commit");
        if !bc.is_merge() {
            commits.insert(id);
        }
        stack.extend(graph.resolved_parents(bc));
    }
    Ok(BranchCommits {
        merge_base: base,
        commits,
    })
}

pub fn branch_length(graph: &CommitGraph, merge: CommitId) -> Result<usize> {
    Ok(branch_commits(graph, merge)?.commits.len())
}

/// Number of files in the merge's diff against its first parent.
pub fn merge_commit_size(graph: &CommitGraph, merge: CommitId) -> Result<usize> {
    let c = graph.commit(&merge)?;
    if !c.is_merge() {
        return Err(Error::NotAMerge(merge));
    }
    Ok(c.changeset.len())
}
