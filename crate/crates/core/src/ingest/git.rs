//! Reads a repository through `git` plumbing commands.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::process::Command;

use crate::error::{Error, Result};
use crate::history::{Commit, CommitGraph, CommitId, FilePath};

fn git(repo: &Path, args: &[&str]) -> std::result::Result<Vec<u8>, String> {
    let output = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .output()
        .map_err(|e| format!("cannot run git: {e}"))?;
    if !output.status.success() {
        return Err(String::from_utf8_lossy(&output.stderr).trim().to_string());
    }
    Ok(output.stdout)
}

fn ingest_err(commit: Option<&CommitId>, message: impl Into<String>) -> Error {
    Error::Ingest {
        commit: commit.map(|c| c.to_hex()),
        message: message.into(),
    }
}

fn parse_id(s: &str, context: Option<&CommitId>) -> Result<CommitId> {
    s.parse()
        .map_err(|_| ingest_err(context, format!("unexpected object id {s:?}")))
}

/// Files that differ between `from` (or the empty tree) and `to`.
/// Renames show up as a deletion plus an addition.
fn changed_paths(repo: &Path, from: Option<&CommitId>, to: &CommitId) -> Result<BTreeSet<FilePath>> {
    let to_hex = to.to_hex();
    let from_hex = from.map(CommitId::to_hex);
    let mut args = vec!["diff-tree", "-r", "-z", "--no-renames", "--no-commit-id", "--name-only"];
    match &from_hex {
        Some(f) => {
            args.push(f);
            args.push(&to_hex);
        }
        None => {
            args.push("--root");
            args.push(&to_hex);
        }
    }
    let raw = git(repo, &args).map_err(|e| ingest_err(Some(to), e))?;
    raw.split(|b| *b == 0)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let s = std::str::from_utf8(p)
                .map_err(|_| ingest_err(Some(to), "path is not valid UTF-8"))?;
            FilePath::new(s).map_err(|e| ingest_err(Some(to), e.to_string()))
        })
        .collect()
}

fn shallow_commits(repo: &Path) -> Result<HashSet<CommitId>> {
    let out = git(repo, &["rev-parse", "--git-path", "shallow"]).map_err(|e| ingest_err(None, e))?;
    let rel = String::from_utf8_lossy(&out).trim().to_string();
    let path = if Path::new(&rel).is_absolute() {
        Path::new(&rel).to_path_buf()
    } else {
        repo.join(rel)
    };
    match std::fs::read_to_string(&path) {
        Ok(text) => text
            .lines()
            .filter(|l| !l.is_empty())
            .map(|l| parse_id(l.trim(), None))
            .collect(),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(HashSet::new()),
        Err(e) => Err(e.into()),
    }
}

/// Parents as recorded in the commit object, ignoring shallow grafts.
fn recorded_parents(repo: &Path, id: &CommitId) -> Result<Vec<CommitId>> {
    let raw = git(repo, &["cat-file", "commit", &id.to_hex()]).map_err(|e| ingest_err(Some(id), e))?;
    let text = String::from_utf8_lossy(&raw);
    text.lines()
        .take_while(|l| !l.is_empty())
        .filter_map(|l| l.strip_prefix("parent "))
        .map(|p| parse_id(p.trim(), Some(id)))
        .collect()
}

/// Builds the graph of every commit reachable from `head_ref`.
///
/// Changesets are diffs against the first parent (every file for a root).
/// Merge commits additionally record, per changed file, whether the merge
/// result equals each parent's version. Commits at a shallow boundary keep
/// their recorded parents, which are listed as boundaries; their changeset
/// is the full tree since the parent is not available.
pub fn ingest_repository(path: &Path, head_ref: &str) -> Result<CommitGraph> {
    git(path, &["rev-parse", "--git-dir"])
        .map_err(|e| ingest_err(None, format!("{} is not a readable repository: {e}", path.display())))?;
    let rev = format!("{head_ref}^{{commit}}");
    let head_raw = git(path, &["rev-parse", "--verify", "--quiet", &rev])
        .map_err(|_| ingest_err(None, format!("cannot resolve ref {head_ref:?}")))?;
    let head = parse_id(String::from_utf8_lossy(&head_raw).trim(), None)?;

    let listing = git(
        path,
        &["log", "--topo-order", "--reverse", "--format=%H %at %P", &head.to_hex()],
    )
    .map_err(|e| ingest_err(Some(&head), e))?;
    let shallow = shallow_commits(path)?;

    let mut commits = Vec::new();
    let mut boundaries = BTreeSet::new();
    for line in String::from_utf8_lossy(&listing).lines() {
        let mut fields = line.split_whitespace();
        let id = parse_id(fields.next().unwrap_or_default(), None)?;
        let ts: i64 = fields
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| ingest_err(Some(&id), "missing author timestamp"))?;
        let visible: Vec<CommitId> = fields.map(|p| parse_id(p, Some(&id))).collect::<Result<_>>()?;

        let parents = if shallow.contains(&id) {
            let recorded = recorded_parents(path, &id)?;
            boundaries.extend(recorded.iter().copied());
            recorded
        } else {
            visible
        };

        let first = parents.first().filter(|_| !shallow.contains(&id));
        let changeset = changed_paths(path, first, &id)?;

        let mut parent_equality = BTreeMap::new();
        if parents.len() >= 2 && !shallow.contains(&id) {
            let mut flags: BTreeMap<FilePath, Vec<bool>> = changeset
                .iter()
                .map(|f| (f.clone(), vec![false; parents.len()]))
                .collect();
            for (i, p) in parents.iter().enumerate().skip(1) {
                let differs = changed_paths(path, Some(p), &id)?;
                for (f, v) in flags.iter_mut() {
                    v[i] = !differs.contains(f);
                }
            }
            parent_equality = flags;
        } else if parents.len() >= 2 {
            // cut-off merge: no parent blobs to compare against
            parent_equality = changeset
                .iter()
                .map(|f| (f.clone(), vec![false; parents.len()]))
                .collect();
        }

        commits.push(Commit {
            id,
            parents,
            author_timestamp: ts,
            changeset,
            parent_equality,
        });
    }

    let known: HashSet<CommitId> = commits.iter().map(|c| c.id).collect();
    boundaries.retain(|b| !known.contains(b));
    CommitGraph::new(commits, head, boundaries).map_err(|e| ingest_err(Some(&head), e.to_string()))
}
