use std::fmt;

use agx_core::{KnowledgeFragment, Value};
use serde::{Deserialize, Serialize};

/// Correlation id shared by a request and its response, or by the messages
/// of one consent round.
pub type Corr = u64;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageKind {
    Broadcast,
    Request,
    Response,
    ConsentPoll,
    ConsentVote,
    Commit,
    Abort,
}

impl MessageKind {
    pub fn name(self) -> &'static str {
        match self {
            MessageKind::Broadcast => "Broadcast",
            MessageKind::Request => "Request",
            MessageKind::Response => "Response",
            MessageKind::ConsentPoll => "ConsentPoll",
            MessageKind::ConsentVote => "ConsentVote",
            MessageKind::Commit => "Commit",
            MessageKind::Abort => "Abort",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One edit to a section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Change {
    /// Sets an attribute on the section's metavertex.
    SetAttribute { name: String, value: Value },
    /// Adds a vertex carrying `fragment` to the section.
    AddFragment { fragment: KnowledgeFragment },
}

pub type ChangeSet = Vec<Change>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Payload {
    Fragment(KnowledgeFragment),
    /// Query text; the bus does not interpret it.
    Query(String),
    Changes(ChangeSet),
    Empty,
}

impl Payload {
    /// Short content-addressed reference used in transcripts:
    /// `<variant>[/<fragment kind>]:<crc32>`.
    pub fn reference(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("payloads serialize");
        let crc = crc32fast::hash(&bytes);
        match self {
            Payload::Fragment(f) => format!("fragment/{}:{crc:08x}", f.kind),
            Payload::Query(_) => format!("query:{crc:08x}"),
            Payload::Changes(_) => format!("changes:{crc:08x}"),
            Payload::Empty => "empty".into(),
        }
    }

    pub fn fragment(&self) -> Option<&KnowledgeFragment> {
        match self {
            Payload::Fragment(f) => Some(f),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BusMessage {
    pub seq: u64,
    pub from: String,
    pub kind: MessageKind,
    pub corr: Option<Corr>,
    pub payload: Payload,
    /// Shared section a consent message is about.
    pub section: Option<String>,
}
