use std::io::Write;

use super::text::{export_with_ids, import_with_ids, IdTable};
use super::{PersistError, PersistResult};
use crate::id::ElementId;
use crate::profile::ValidationProfile;
use crate::store::Store;

const MAGIC: &[u8; 8] = b"AGXSNAP1";

/// A store as of log sequence number `seq`.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub seq: u64,
    pub store: Store,
}

/// Writes `magic | body length | body | crc32(body)`. The body holds the
/// canonical text plus the original ids, so log entries recorded after
/// `seq` still apply to the loaded store.
pub fn save_snapshot(store: &Store, seq: u64, sink: &mut impl Write) -> PersistResult<()> {
    let (text, ids) = export_with_ids(store)?;
    let mut body = Vec::new();
    body.extend_from_slice(&seq.to_le_bytes());
    body.extend_from_slice(&store.next_id_value().to_le_bytes());
    let profile = store.profile().name().as_bytes();
    body.push(profile.len() as u8);
    body.extend_from_slice(profile);
    body.extend_from_slice(&(text.len() as u64).to_le_bytes());
    body.extend_from_slice(text.as_bytes());
    for list in [&ids.elems, &ids.attrs] {
        body.extend_from_slice(&(list.len() as u64).to_le_bytes());
        for id in list.iter() {
            body.extend_from_slice(&id.0.to_le_bytes());
        }
    }
    sink.write_all(MAGIC)?;
    sink.write_all(&(body.len() as u64).to_le_bytes())?;
    sink.write_all(&body)?;
    sink.write_all(&crc32fast::hash(&body).to_le_bytes())?;
    sink.flush()?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> PersistResult<&'a [u8]> {
        let end = self
            .at
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(PersistError::TruncatedSnapshot)?;
        let s = &self.bytes[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u64(&mut self) -> PersistResult<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn u128(&mut self) -> PersistResult<u128> {
        Ok(u128::from_le_bytes(
            self.take(16)?.try_into().expect("16 bytes"),
        ))
    }

    fn ids(&mut self) -> PersistResult<Vec<ElementId>> {
        let n = self.u64()? as usize;
        (0..n).map(|_| self.u128().map(ElementId)).collect()
    }
}

/// Loads a snapshot into a store with the bundled registry.
pub fn load_snapshot(bytes: &[u8]) -> PersistResult<Snapshot> {
    load_snapshot_into(bytes, Store::new())
}

pub fn load_snapshot_into(bytes: &[u8], mut base: Store) -> PersistResult<Snapshot> {
    let mut c = Cursor { bytes, at: 0 };
    if c.take(MAGIC.len())? != MAGIC {
        return Err(PersistError::Parse {
            line: 0,
            col: 0,
            message: "not an agx snapshot".into(),
        });
    }
    let len = c.u64()? as usize;
    let body = c.take(len)?;
    let crc = u32::from_le_bytes(c.take(4)?.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != crc {
        return Err(PersistError::SnapshotChecksumMismatch);
    }
    let mut b = Cursor { bytes: body, at: 0 };
    let seq = b.u64()?;
    let next_id = b.u128()?;
    let plen = b.take(1)?[0] as usize;
    let profile: ValidationProfile = std::str::from_utf8(b.take(plen)?)
        .ok()
        .and_then(|p| p.parse().ok())
        .ok_or(PersistError::TruncatedSnapshot)?;
    let tlen = b.u64()? as usize;
    let text = std::str::from_utf8(b.take(tlen)?).map_err(|_| PersistError::TruncatedSnapshot)?;
    let ids = IdTable {
        elems: b.ids()?,
        attrs: b.ids()?,
    };
    base.set_profile(profile);
    let mut store = import_with_ids(text, base, Some(&ids))?;
    store.set_next_id(next_id);
    Ok(Snapshot { seq, store })
}
