use serde::{Deserialize, Serialize};

use crate::message::Corr;

/// Prefix of the `to` field of a record that notes a message entering its
/// publisher's queue. The recipients fixed at that moment follow it,
/// comma-separated.
pub const PUBLISHED: &str = "*";

/// Sender name used for events the bus itself originates.
pub const BUS: &str = "bus";

/// Record kinds beyond the message kinds.
pub const TIMEOUT: &str = "Timeout";
pub const SECTION_WRITE: &str = "SectionWrite";
pub const DROPPED: &str = "Dropped";
pub const REGISTER: &str = "Register";
pub const DECLARE_SHARED: &str = "DeclareShared";

/// One transcript line. Field order is the serialized key order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub seq: u64,
    pub tick: u64,
    pub from: String,
    pub to: String,
    pub kind: String,
    pub corr: Option<Corr>,
    #[serde(rename = "payloadRef")]
    pub payload_ref: Option<String>,
}

impl Record {
    pub fn is_publish(&self) -> bool {
        self.to.starts_with(PUBLISHED)
    }

    /// Recipients of a publish record.
    pub fn recipients(&self) -> Vec<&str> {
        match self.to.strip_prefix(PUBLISHED) {
            Some("") | None => Vec::new(),
            Some(list) => list.split(',').collect(),
        }
    }

    /// A message handed to a module's handler, or a timeout event.
    pub fn is_delivery(&self) -> bool {
        !self.is_publish()
            && matches!(
                self.kind.as_str(),
                "Broadcast" | "Request" | "Response" | "ConsentPoll" | "Commit" | "Abort" | TIMEOUT
            )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Transcript {
    pub records: Vec<Record>,
}

impl Transcript {
    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Transcript { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn deliveries(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| r.is_delivery())
    }

    /// Deliveries as a sorted multiset of (from, to, kind, payloadRef),
    /// ignoring order, ticks and numbering.
    pub fn delivery_multiset(&self) -> Vec<(String, String, String, Option<String>)> {
        let mut v: Vec<_> = self
            .deliveries()
            .map(|r| {
                (
                    r.from.clone(),
                    r.to.clone(),
                    r.kind.clone(),
                    r.payload_ref.clone(),
                )
            })
            .collect();
        v.sort();
        v
    }
}
