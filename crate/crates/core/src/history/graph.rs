use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, HashSet};

use super::{CommitId, FilePath};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Commit {
    pub id: CommitId,
    /// Index 0 is the first parent.
    pub parents: Vec<CommitId>,
    pub author_timestamp: i64,
    /// Files changed relative to the first parent, or all files for a root.
    pub changeset: BTreeSet<FilePath>,
    /// Merge commits only: for every changed file, whether the merge's blob
    /// equals the blob in each parent (same order as `parents`).
    pub parent_equality: BTreeMap<FilePath, Vec<bool>>,
}

impl Commit {
    /// Builds a commit. A merge built this way is clean: every changed file
    /// is taken verbatim from the last parent that has it, which is modelled
    /// as "equal to every non-first parent".
    pub fn new<I, P>(id: CommitId, parents: Vec<CommitId>, author_timestamp: i64, files: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<FilePath>,
    {
        let changeset: BTreeSet<FilePath> = files.into_iter().map(Into::into).collect();
        let parent_equality = if parents.len() >= 2 {
            changeset
                .iter()
                .map(|f| {
                    let flags = (0..parents.len()).map(|i| i > 0).collect();
                    (f.clone(), flags)
                })
                .collect()
        } else {
            BTreeMap::new()
        };
        Commit {
            id,
            parents,
            author_timestamp,
            changeset,
            parent_equality,
        }
    }

    /// Marks files as changed at the merge itself (content differs from
    /// every parent). The files are added to the changeset.
    pub fn with_additional_changes<I, P>(mut self, files: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<FilePath>,
    {
        let n = self.parents.len();
        for f in files {
            let f = f.into();
            self.changeset.insert(f.clone());
            self.parent_equality.insert(f, vec![false; n]);
        }
        self
    }

    pub fn with_parent_equality(mut self, file: impl Into<FilePath>, flags: Vec<bool>) -> Self {
        let file = file.into();
        self.changeset.insert(file.clone());
        self.parent_equality.insert(file, flags);
        self
    }

    pub fn is_merge(&self) -> bool {
        self.parents.len() >= 2
    }

    pub fn first_parent(&self) -> Option<CommitId> {
        self.parents.first().copied()
    }
}

impl From<&str> for FilePath {
    /// Panics on an invalid path; meant for literals in fixtures.
    fn from(s: &str) -> Self {
        FilePath::new(s).unwrap_or_else(|e| panic!("{e}"))
    }
}

/// Immutable commit DAG. Parents that are not part of the graph must be
/// listed as boundaries (shallow edges); traversals stop at them.
#[derive(Clone, Debug)]
pub struct CommitGraph {
    commits: HashMap<CommitId, Commit>,
    head: CommitId,
    boundaries: BTreeSet<CommitId>,
    generation: HashMap<CommitId, u32>,
    children: HashMap<CommitId, Vec<CommitId>>,
    topo: Vec<CommitId>,
}

impl PartialEq for CommitGraph {
    fn eq(&self, other: &Self) -> bool {
        self.head == other.head && self.boundaries == other.boundaries && self.commits == other.commits
    }
}

impl Eq for CommitGraph {}

impl CommitGraph {
    pub fn new(
        commits: impl IntoIterator<Item = Commit>,
        head: CommitId,
        boundaries: impl IntoIterator<Item = CommitId>,
    ) -> Result<Self> {
        let boundaries: BTreeSet<CommitId> = boundaries.into_iter().collect();
        let mut map = HashMap::new();
        for c in commits {
            let id = c.id;
            if map.insert(id, c).is_some() {
                return Err(Error::Graph(format!("duplicate commit {id}")));
            }
        }
        if !map.contains_key(&head) {
            return Err(Error::Graph(format!("head {head} is not in the graph")));
        }
        if let Some(b) = boundaries.iter().find(|b| map.contains_key(b)) {
            return Err(Error::Graph(format!("boundary {b} is also a commit")));
        }
        for c in map.values() {
            validate_commit(c, &map, &boundaries)?;
        }

        let mut children: HashMap<CommitId, Vec<CommitId>> = HashMap::new();
        for c in map.values() {
            for p in c.parents.iter().filter(|p| map.contains_key(p)) {
                children.entry(*p).or_default().push(c.id);
            }
        }
        for v in children.values_mut() {
            v.sort();
        }

        // Kahn from roots to tips; oldest first, ids break ties.
        let mut pending: HashMap<CommitId, usize> = map
            .values()
            .map(|c| (c.id, c.parents.iter().filter(|p| map.contains_key(p)).count()))
            .collect();
        let mut ready: BinaryHeap<Reverse<(i64, CommitId)>> = pending
            .iter()
            .filter(|(_, n)| **n == 0)
            .map(|(id, _)| Reverse((map[id].author_timestamp, *id)))
            .collect();
        let mut topo = Vec::with_capacity(map.len());
        let mut generation = HashMap::with_capacity(map.len());
        while let Some(Reverse((_, id))) = ready.pop() {
            let gen = map[&id]
                .parents
                .iter()
                .filter_map(|p| generation.get(p))
                .max()
                .map_or(1, |g| g + 1);
            generation.insert(id, gen);
            topo.push(id);
            for child in children.get(&id).into_iter().flatten() {
                let n = pending.get_mut(child).expect("child is a commit");
                *n -= 1;
                if *n == 0 {
                    ready.push(Reverse((map[child].author_timestamp, *child)));
                }
            }
        }
        if topo.len() != map.len() {
            return Err(Error::Graph("commit graph contains a cycle".into()));
        }

        Ok(CommitGraph {
            commits: map,
            head,
            boundaries,
            generation,
            children,
            topo,
        })
    }

    pub fn head(&self) -> CommitId {
        self.head
    }

    pub fn boundaries(&self) -> &BTreeSet<CommitId> {
        &self.boundaries
    }

    pub fn len(&self) -> usize {
        self.commits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.commits.is_empty()
    }

    pub fn contains(&self, id: &CommitId) -> bool {
        self.commits.contains_key(id)
    }

    pub fn get(&self, id: &CommitId) -> Option<&Commit> {
        self.commits.get(id)
    }

    pub fn commit(&self, id: &CommitId) -> Result<&Commit> {
        self.commits.get(id).ok_or(Error::UnknownCommit(*id))
    }

    /// Parents that resolve inside the graph, in parent order.
    pub fn resolved_parents<'a>(&'a self, c: &'a Commit) -> impl Iterator<Item = CommitId> + 'a {
        c.parents.iter().copied().filter(|p| self.commits.contains_key(p))
    }

    pub fn children(&self, id: &CommitId) -> &[CommitId] {
        self.children.get(id).map_or(&[], Vec::as_slice)
    }

    /// 1 for commits without resolvable parents, else 1 + max over parents.
    pub fn generation(&self, id: &CommitId) -> Option<u32> {
        self.generation.get(id).copied()
    }

    /// All commits, parents before children (oldest first on ties).
    pub fn topological(&self) -> impl Iterator<Item = &Commit> {
        self.topo.iter().map(|id| &self.commits[id])
    }

    /// True if the commit has a parent cut off by a shallow boundary.
    pub fn is_truncated(&self, c: &Commit) -> bool {
        c.parents.iter().any(|p| self.boundaries.contains(p))
    }
}

fn validate_commit(
    c: &Commit,
    map: &HashMap<CommitId, Commit>,
    boundaries: &BTreeSet<CommitId>,
) -> Result<()> {
    c.check_shape()?;
    for p in &c.parents {
        if !map.contains_key(p) && !boundaries.contains(p) {
            return Err(Error::Graph(format!(
                "parent {p} of {} is neither a commit nor a boundary",
                c.id
            )));
        }
    }
    Ok(())
}

impl Commit {
    /// Checks everything that does not need the rest of the graph.
    pub(crate) fn check_shape(&self) -> Result<()> {
        let c = self;
        let mut seen = HashSet::new();
        for p in &c.parents {
            if *p == c.id {
                return Err(Error::Graph(format!("commit {} is its own parent", c.id)));
            }
            if !seen.insert(*p) {
                return Err(Error::Graph(format!("commit {} lists parent {p} twice", c.id)));
            }
        }
        c.check_equality_data()
    }

    fn check_equality_data(&self) -> Result<()> {
        let c = self;
    if c.is_merge() {
        for f in &c.changeset {
            match c.parent_equality.get(f) {
                None => {
                    return Err(Error::Graph(format!(
                        "merge {} has no parent equality data for {f}",
                        c.id
                    )))
                }
                Some(flags) if flags.len() != c.parents.len() => {
                    return Err(Error::Graph(format!(
                        "merge {}: equality flags for {f} do not match the parent count",
                        c.id
                    )))
                }
                Some(flags) if flags[0] => {
                    return Err(Error::Graph(format!(
                        "merge {}: {f} is in the changeset but equals the first parent",
                        c.id
                    )))
                }
                Some(_) => {}
            }
        }
        if let Some(f) = c.parent_equality.keys().find(|f| !c.changeset.contains(*f)) {
            return Err(Error::Graph(format!(
                "merge {}: equality data for unchanged file {f}",
                c.id
            )));
        }
    } else if !c.parent_equality.is_empty() {
        return Err(Error::Graph(format!(
            "non-merge commit {} carries parent equality data",
            c.id
        )));
    }
    Ok(())
}
}
