//! Line-delimited snapshot files.
//!
//! The first line is a header object, every following line one commit,
//! parents before children:
//!
//! ```text
//! {"format_version":1,"repo_label":"demo","head":"<40hex>","boundaries":[]}
//! {"id":"<40hex>","parents":[],"ts":1600000000,"files":["a.txt"],"merge_eq":{}}
//! ```
//!
//! `merge_eq` maps each changed file of a merge commit to one flag per
//! parent telling whether the merge's content equals that parent's.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::history::{Commit, CommitGraph, CommitId, FilePath};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format_version: u32,
    repo_label: String,
    head: CommitId,
    boundaries: Vec<CommitId>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: CommitId,
    parents: Vec<CommitId>,
    ts: i64,
    files: Vec<FilePath>,
    merge_eq: BTreeMap<FilePath, Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HistorySnapshot {
    pub repo_label: String,
    pub graph: CommitGraph,
}

impl HistorySnapshot {
    pub fn new(repo_label: impl Into<String>, graph: CommitGraph) -> Self {
        HistorySnapshot {
            repo_label: repo_label.into(),
            graph,
        }
    }

    /// Serialises the snapshot. Output is byte-identical for equal graphs.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Header {
            format_version: FORMAT_VERSION,
            repo_label: self.repo_label.clone(),
            head: self.graph.head(),
            boundaries: self.graph.boundaries().iter().copied().collect(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for c in self.graph.topological() {
            let record = Record {
                id: c.id,
                parents: c.parents.clone(),
                ts: c.author_timestamp,
                files: c.changeset.iter().cloned().collect(),
                merge_eq: c.parent_equality.clone(),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        buf
    }

    /// Parses and validates a snapshot. `origin` only labels error messages.
    pub fn read_from<R: BufRead>(input: R, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Snapshot {
            path: origin.to_path_buf(),
            line,
            message,
        };

        let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, first) = lines.next().ok_or_else(|| err(1, "empty snapshot".into()))?;
        let first = first?;

        // check the version before the rest of the header so that a future
        // format is reported as such rather than as a schema error
        let raw: serde_json::Value =
            serde_json::from_str(&first).map_err(|e| err(1, format!("bad header: {e}")))?;
        match raw.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(err(
                    1,
                    format!("unsupported format_version {v} (this tool reads version {FORMAT_VERSION})"),
                ))
            }
            None => return Err(err(1, "header lacks format_version".into())),
        }
        let header: Header =
            serde_json::from_value(raw).map_err(|e| err(1, format!("bad header: {e}")))?;
        let boundaries: BTreeSet<CommitId> = header.boundaries.iter().copied().collect();

        let mut seen: HashSet<CommitId> = HashSet::new();
        let mut commits = Vec::new();
        let mut trailing_blank = None;
        for (n, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                trailing_blank.get_or_insert(n);
                continue;
            }
            if let Some(blank) = trailing_blank {
                return Err(err(blank, "blank line inside snapshot".into()));
            }
            let record: Record =
                serde_json::from_str(&line).map_err(|e| err(n, format!("bad record: {e}")))?;
            if boundaries.contains(&record.id) {
                return Err(err(n, format!("commit {} is also listed as a boundary", record.id)));
            }
            if !seen.insert(record.id) {
                return Err(err(n, format!("duplicate commit {}", record.id)));
            }
            if let Some(p) = record
                .parents
                .iter()
                .find(|p| !seen.contains(p) && !boundaries.contains(p))
            {
                return Err(err(
                    n,
                    format!("parent {p} of {} does not appear earlier and is not a boundary", record.id),
                ));
            }
            let file_count = record.files.len();
            let changeset: BTreeSet<FilePath> = record.files.into_iter().collect();
            if changeset.len() != file_count {
                return Err(err(n, "duplicate file in files".into()));
            }
            let commit = Commit {
                id: record.id,
                parents: record.parents,
                author_timestamp: record.ts,
                changeset,
                parent_equality: record.merge_eq,
            };
            commit.check_shape().map_err(|e| err(n, e.to_string()))?;
            commits.push(commit);
        }

        let graph = CommitGraph::new(commits, header.head, boundaries)
            .map_err(|e| err(1, e.to_string()))?;
        Ok(HistorySnapshot {
            repo_label: header.repo_label,
            graph,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        Self::read_from(BufReader::new(file), path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        self.write_to(BufWriter::new(file))
    }
}

pub fn save_snapshot(graph: &CommitGraph, repo_label: &str, out: &Path) -> Result<()> {
    HistorySnapshot::new(repo_label, graph.clone()).save(out)
}

pub fn load_snapshot(input: &Path) -> Result<CommitGraph> {
    Ok(HistorySnapshot::load(input)?.graph)
}
