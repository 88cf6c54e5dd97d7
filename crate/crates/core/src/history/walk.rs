use std::collections::{BinaryHeap, HashMap, HashSet};

use super::merge::additional_changes_of;
use super::{BranchHandlingStrategy, ChangesetEntry, CommitGraph, CommitId, EntryOrigin};
use crate::error::Result;

/// `start`, then its first parent, and so on until a root or a boundary.
pub fn ancestors_first_parent(graph: &CommitGraph, start: CommitId) -> Result<Vec<CommitId>> {
    let mut out = vec![start];
    let mut current = graph.commit(&start)?;
    while let Some(parent) = current.first_parent().and_then(|p| graph.get(&p)) {
        out.push(parent.id);
        current = parent;
    }
    Ok(out)
}

/// Every commit reachable from `start`, each once, children before parents.
/// Among commits whose children have all been emitted the newest author
/// timestamp goes first, then the greater id.
pub fn ancestors_all(graph: &CommitGraph, start: CommitId) -> Result<Vec<CommitId>> {
    graph.commit(&start)?;

    let mut reachable = HashSet::new();
    let mut stack = vec![start];
    reachable.insert(start);
    while let Some(id) = stack.pop() {
        let c = &graph.get(&id).expect("reachable commit exists");
        for p in graph.resolved_parents(c) {
            if reachable.insert(p) {
                stack.push(p);
            }
        }
    }

    // children-within-subgraph counters
    let mut waiting: HashMap<CommitId, usize> = HashMap::with_capacity(reachable.len());
    for id in &reachable {
        let c = graph.get(id).expect("reachable commit exists");
        for p in graph.resolved_parents(c) {
            *waiting.entry(p).or_default() += 1;
        }
    }

    let mut out = Vec::with_capacity(reachable.len());
    let mut ready = BinaryHeap::new();
    ready.push((graph.get(&start).expect("checked").author_timestamp, start));
    while let Some((_, id)) = ready.pop() {
        out.push(id);
        let c = graph.get(&id).expect("reachable commit exists");
        for p in graph.resolved_parents(c) {
            let n = waiting.get_mut(&p).expect("counted above");
            *n -= 1;
            if *n == 0 {
                ready.push((graph.get(&p).expect("resolved").author_timestamp, p));
            }
        }
    }
    debug_assert_eq!(out.len(), reachable.len());
    Ok(out)
}

/// The changeset stream a strategy extracts from the history ending at
/// `start`. Entries with no files are dropped.
pub fn strategy_walk(
    graph: &CommitGraph,
    start: CommitId,
    strategy: BranchHandlingStrategy,
) -> Result<Vec<ChangesetEntry>> {
    let order = match strategy {
        BranchHandlingStrategy::Full => ancestors_all(graph, start)?,
        _ => ancestors_first_parent(graph, start)?,
    };
    let entries = order
        .into_iter()
        .filter_map(|id| {
            let c = graph.get(&id).expect("walked commit exists");
            let (files, origin) = if !c.is_merge() {
                (c.changeset.clone(), EntryOrigin::Ordinary)
            } else if strategy == BranchHandlingStrategy::FirstParentMerge {
                (c.changeset.clone(), EntryOrigin::MergeFullDiff)
            } else {
                (additional_changes_of(c), EntryOrigin::MergeAdditionalOnly)
            };
            (!files.is_empty()).then_some(ChangesetEntry {
                commit_id: id,
                files,
                origin,
                commit_size: c.changeset.len(),
            })
        })
        .collect();
    Ok(entries)
}
