//! In-memory commit graph and the branch handling strategies.

mod graph;
pub(crate) mod merge;
mod walk;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use graph::{Commit, CommitGraph};
pub use merge::{
    additional_changes, branch_commits, branch_length, merge_base, merge_commit_size,
    BranchCommits,
};
pub use walk::{ancestors_all, ancestors_first_parent, strategy_walk};

/// Repository-relative, `/`-separated path. Comparison is byte-exact.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FilePath(Arc<str>);

impl FilePath {
    pub fn new(value: impl AsRef<str>) -> Result<Self> {
        let value = value.as_ref();
        if value.is_empty() {
            return Err(Error::InvalidPath(value.into(), "empty path"));
        }
        if value.starts_with('/') {
            return Err(Error::InvalidPath(value.into(), "leading slash"));
        }
        for segment in value.split('/') {
            match segment {
                "" => return Err(Error::InvalidPath(value.into(), "empty segment")),
                "." | ".." => return Err(Error::InvalidPath(value.into(), "relative segment")),
                _ => {}
            }
        }
        Ok(FilePath(Arc::from(value)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FilePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for FilePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl FromStr for FilePath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FilePath::new(s)
    }
}

impl Serialize for FilePath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for FilePath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        FilePath::new(s).map_err(serde::de::Error::custom)
    }
}

/// Full 40-hex-digit object id. Abbreviations are not accepted.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommitId([u8; 20]);

impl CommitId {
    pub fn from_bytes(bytes: [u8; 20]) -> Self {
        CommitId(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl FromStr for CommitId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let ok = s.len() == 40 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if !ok {
            return Err(Error::InvalidCommitId(s.into()));
        }
        let mut bytes = [0u8; 20];
        hex::decode_to_slice(s, &mut bytes).map_err(|_| Error::InvalidCommitId(s.into()))?;
        Ok(CommitId(bytes))
    }
}

impl fmt::Display for CommitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for CommitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // trailing 8 digits are enough to tell fixture ids apart
        write!(f, "CommitId({})", &self.to_hex()[32..])
    }
}

impl Serialize for CommitId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for CommitId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchHandlingStrategy {
    Full,
    #[serde(rename = "fp-no-merge")]
    FirstParentNoMerge,
    #[serde(rename = "fp-merge")]
    FirstParentMerge,
}

impl BranchHandlingStrategy {
    pub const ALL: [BranchHandlingStrategy; 3] = [
        BranchHandlingStrategy::Full,
        BranchHandlingStrategy::FirstParentNoMerge,
        BranchHandlingStrategy::FirstParentMerge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BranchHandlingStrategy::Full => "full",
            BranchHandlingStrategy::FirstParentNoMerge => "fp-no-merge",
            BranchHandlingStrategy::FirstParentMerge => "fp-merge",
        }
    }

    pub fn follows_first_parent(self) -> bool {
        !matches!(self, BranchHandlingStrategy::Full)
    }
}

impl fmt::Display for BranchHandlingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BranchHandlingStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(BranchHandlingStrategy::Full),
            "fp-no-merge" => Ok(BranchHandlingStrategy::FirstParentNoMerge),
            "fp-merge" => Ok(BranchHandlingStrategy::FirstParentMerge),
            other => Err(Error::contract(format!(
                "unknown strategy {other:?} (expected full, fp-no-merge or fp-merge)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryOrigin {
    Ordinary,
    MergeFullDiff,
    MergeAdditionalOnly,
}

/// One changeset emitted by a strategy walk. `files` is never empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChangesetEntry {
    pub commit_id: CommitId,
    pub files: std::collections::BTreeSet<FilePath>,
    pub origin: EntryOrigin,
    /// Changed files of the commit itself (diff vs. first parent), which
    /// can exceed `files` for merges contributing additional changes only.
    pub commit_size: usize,
}
