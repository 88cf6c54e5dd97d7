//! Evolutionary-coupling change recommendation over Git histories.
//!
//! The crate is organised around an immutable [`CommitGraph`] and three
//! branch handling strategies that turn that graph into a stream of
//! changesets:
//!
//! * `Full` walks every reachable commit and ignores the merging change of
//!   merge commits,
//! * `FirstParentNoMerge` follows the first parent only and ignores merging
//!   changes,
//! * `FirstParentMerge` follows the first parent only and takes the whole
//!   first-parent diff of each merge as one changeset.
//!
//! On top of that sit the association-rule miner ([`rules`]), the "other
//! files" recommender ([`recommend`]), the paired evaluation protocol
//! ([`eval`]) and the branch characteristic analyses ([`branches`]).

pub mod branches;
pub mod error;
pub mod eval;
pub mod history;
pub mod ingest;
pub mod rational;
pub mod recommend;
pub mod rules;
pub mod synth;

pub use error::{Error, Result};
pub use history::{
    BranchHandlingStrategy, ChangesetEntry, Commit, CommitGraph, CommitId, EntryOrigin, FilePath,
};
pub use rational::Rational;
