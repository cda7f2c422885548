//! Persistence: the canonical line-oriented text format, an append-only
//! operation log and checksummed binary snapshots.

mod oplog;
mod snapshot;
mod text;

use thiserror::Error;

use crate::error::StoreError;

pub use oplog::{
    decode_log, encode_entry, replay, replay_onto, DecodedLog, LogEntry, OpLog, ReplayReport,
};
pub use snapshot::{load_snapshot, load_snapshot_into, save_snapshot, Snapshot};
pub use text::{export_text, import_text, import_text_into, HEADER};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PersistError {
    #[error("{line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("{line}:1: unknown record type `{record}`")]
    UnknownRecordType { line: usize, record: String },
    #[error("{line}:{col}: reference to undeclared element `{label}`")]
    DanglingReference {
        line: usize,
        col: usize,
        label: String,
    },
    #[error("unsupported format version `{0}`")]
    VersionUnsupported(String),
    #[error("store does not validate: {0}")]
    ValidationFailed(String),
    #[error("line {line}: {source}")]
    Store { line: usize, source: StoreError },
    #[error("checksum mismatch in log entry {0}")]
    ChecksumMismatch(u64),
    #[error("log entry {found} follows {expected_after}")]
    SequenceGap { expected_after: u64, found: u64 },
    #[error("snapshot checksum mismatch")]
    SnapshotChecksumMismatch,
    #[error("snapshot is truncated")]
    TruncatedSnapshot,
    #[error("malformed log entry {seq}: {message}")]
    MalformedEntry { seq: u64, message: String },
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for PersistError {
    fn from(e: std::io::Error) -> Self {
        PersistError::Io(e.to_string())
    }
}

impl From<StoreError> for PersistError {
    fn from(source: StoreError) -> Self {
        PersistError::Store { line: 0, source }
    }
}

pub type PersistResult<T> = Result<T, PersistError>;
