use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PersistError, PersistResult};
use crate::store::{Op, Store};

/// Frame header: body length, CRC of the length bytes, CRC of the body.
const FRAME_HEADER: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub seq: u64,
    pub op: Op,
}

pub fn encode_entry(entry: &LogEntry) -> Vec<u8> {
    let body = serde_json::to_vec(entry).expect("ops serialize to json");
    let len = (body.len() as u32).to_le_bytes();
    let mut out = Vec::with_capacity(FRAME_HEADER + body.len());
    out.extend_from_slice(&len);
    out.extend_from_slice(&crc32fast::hash(&len).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&body).to_le_bytes());
    out.extend_from_slice(&body);
    out
}

/// The valid prefix of a log and why reading stopped.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedLog {
    pub entries: Vec<LogEntry>,
    pub error: Option<PersistError>,
    /// Bytes covered by `entries`.
    pub valid_len: usize,
    /// The log ends in a partially written frame.
    pub truncated_tail: bool,
}

pub fn decode_log(bytes: &[u8]) -> DecodedLog {
    let mut out = DecodedLog {
        entries: Vec::new(),
        error: None,
        valid_len: 0,
        truncated_tail: false,
    };
    let mut at = 0;
    while at < bytes.len() {
        let k = out.entries.len() as u64 + 1;
        if bytes.len() - at < FRAME_HEADER {
            out.truncated_tail = true;
            break;
        }
        let word =
            |i: usize| u32::from_le_bytes(bytes[at + i..at + i + 4].try_into().expect("4 bytes"));
        if crc32fast::hash(&bytes[at..at + 4]) != word(4) {
            out.error = Some(PersistError::ChecksumMismatch(k));
            break;
        }
        let len = word(0) as usize;
        let start = at + FRAME_HEADER;
        if bytes.len() - start < len {
            out.truncated_tail = true;
            break;
        }
        let body = &bytes[start..start + len];
        if crc32fast::hash(body) != word(8) {
            out.error = Some(PersistError::ChecksumMismatch(k));
            break;
        }
        let entry: LogEntry = match serde_json::from_slice(body) {
            Ok(e) => e,
            Err(e) => {
                out.error = Some(PersistError::MalformedEntry {
                    seq: k,
                    message: e.to_string(),
                });
                break;
            }
        };
        let expected = out
            .entries
            .last()
            .map_or(entry.seq.min(1), |p: &LogEntry| p.seq + 1);
        if entry.seq != expected {
            out.error = Some(PersistError::SequenceGap {
                expected_after: expected.saturating_sub(1),
                found: entry.seq,
            });
            break;
        }
        out.entries.push(entry);
        at = start + len;
        out.valid_len = at;
    }
    out
}

#[derive(Clone, Debug)]
pub struct ReplayReport {
    pub store: Store,
    /// Sequence number of the last entry applied (or the base's).
    pub last_seq: u64,
    /// Why replay stopped early, if it did.
    pub error: Option<PersistError>,
    pub truncated_tail: bool,
}

/// Replays a whole log onto an empty store.
pub fn replay(bytes: &[u8]) -> ReplayReport {
    replay_onto(Store::new(), 0, bytes)
}

/// Replays the entries after `after_seq` onto `base`, e.g. a snapshot taken
/// at that sequence number.
pub fn replay_onto(mut base: Store, after_seq: u64, bytes: &[u8]) -> ReplayReport {
    let decoded = decode_log(bytes);
    let mut last = after_seq;
    let mut error = None;
    for e in decoded.entries.into_iter().filter(|e| e.seq > after_seq) {
        if e.seq != last + 1 {
            error = Some(PersistError::SequenceGap {
                expected_after: last,
                found: e.seq,
            });
            break;
        }
        if let Err(err) = base.apply(e.op) {
            error = Some(PersistError::MalformedEntry {
                seq: e.seq,
                message: err.to_string(),
            });
            break;
        }
        last = e.seq;
    }
    ReplayReport {
        store: base,
        last_seq: last,
        error: error.or(decoded.error),
        truncated_tail: decoded.truncated_tail,
    }
}

/// Append-only file of framed entries. Every append is synced before it
/// returns.
#[derive(Debug)]
pub struct OpLog {
    file: File,
    last_seq: u64,
}

impl OpLog {
    /// Creates an empty log, replacing any file at `path`.
    pub fn create(path: impl AsRef<Path>) -> PersistResult<Self> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .read(true)
            .truncate(true)
            .open(path)?;
        Ok(OpLog { file, last_seq: 0 })
    }

    /// Opens an existing log for appending. A torn final frame is cut off;
    /// corruption before it is an error.
    pub fn open(path: impl AsRef<Path>) -> PersistResult<Self> {
        let mut file = OpenOptions::new().read(true).write(true).open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        let decoded = decode_log(&bytes);
        if let Some(e) = decoded.error {
            return Err(e);
        }
        file.set_len(decoded.valid_len as u64)?;
        file.seek(SeekFrom::End(0))?;
        Ok(OpLog {
            file,
            last_seq: decoded.entries.last().map_or(0, |e| e.seq),
        })
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    /// Appends `op` as the next entry and returns its sequence number.
    pub fn append(&mut self, op: &Op) -> PersistResult<u64> {
        let entry = LogEntry {
            seq: self.last_seq + 1,
            op: op.clone(),
        };
        self.append_entry(&entry)?;
        Ok(entry.seq)
    }

    pub fn append_entry(&mut self, entry: &LogEntry) -> PersistResult<()> {
        if entry.seq != self.last_seq + 1 {
            return Err(PersistError::SequenceGap {
                expected_after: self.last_seq,
                found: entry.seq,
            });
        }
        self.file.write_all(&encode_entry(entry))?;
        self.file.sync_data()?;
        self.last_seq = entry.seq;
        Ok(())
    }
}
