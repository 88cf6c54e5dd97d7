//! Getting histories in and out: Git repositories and snapshot files.

mod git;
mod snapshot;

pub use git::ingest_repository;
pub use snapshot::{load_snapshot, save_snapshot, HistorySnapshot, FORMAT_VERSION};
