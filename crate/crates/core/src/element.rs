//! Element records.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::id::ElementId;
use crate::knowledge::FragmentBody;
use crate::sets::SetSpec;
use crate::value::Value;

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    Vertex,
    Edge,
    MetaVertex,
    MetaEdge,
    Attribute,
    Function,
}

impl ElementKind {
    pub const ALL: [ElementKind; 6] = [
        ElementKind::Vertex,
        ElementKind::Edge,
        ElementKind::MetaVertex,
        ElementKind::MetaEdge,
        ElementKind::Attribute,
        ElementKind::Function,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Vertex => "vertex",
            ElementKind::Edge => "edge",
            ElementKind::MetaVertex => "metavertex",
            ElementKind::MetaEdge => "metaedge",
            ElementKind::Attribute => "attribute",
            ElementKind::Function => "function",
        }
    }

    pub fn is_container(self) -> bool {
        matches!(self, ElementKind::MetaVertex | ElementKind::MetaEdge)
    }

    pub fn is_link(self) -> bool {
        matches!(self, ElementKind::Edge | ElementKind::MetaEdge)
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        ElementKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or(())
    }
}

/// Source and target lists of an edge or metaedge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Endpoints {
    pub from: Vec<ElementId>,
    pub to: Vec<ElementId>,
    pub directed: bool,
}

/// Payload of an attribute element.
#[derive(Clone, Debug, PartialEq)]
pub struct AttrData {
    pub owner: ElementId,
    pub name: String,
    pub value: Value,
}

#[derive(Clone, Debug)]
pub struct Element {
    pub(crate) id: ElementId,
    pub(crate) kind: ElementKind,
    pub(crate) token: Option<String>,
    pub(crate) attributes: Vec<ElementId>,
    pub(crate) members: BTreeSet<ElementId>,
    pub(crate) endpoints: Option<Endpoints>,
    pub(crate) set_spec: Option<SetSpec>,
    pub(crate) fragment: Option<FragmentBody>,
    pub(crate) attr: Option<AttrData>,
}

impl Element {
    pub(crate) fn new(id: ElementId, kind: ElementKind, token: Option<String>) -> Self {
        Element {
            id,
            kind,
            token,
            attributes: Vec::new(),
            members: BTreeSet::new(),
            endpoints: None,
            set_spec: None,
            fragment: None,
            attr: None,
        }
    }

    pub fn id(&self) -> ElementId {
        self.id
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn token(&self) -> Option<&str> {
        self.token.as_deref()
    }

    /// Ids of the owned attribute elements, in store order.
    pub fn attribute_ids(&self) -> &[ElementId] {
        &self.attributes
    }

    pub fn members(&self) -> &BTreeSet<ElementId> {
        &self.members
    }

    pub fn endpoints(&self) -> Option<&Endpoints> {
        self.endpoints.as_ref()
    }

    pub fn set_spec(&self) -> Option<&SetSpec> {
        self.set_spec.as_ref()
    }

    pub fn fragment_body(&self) -> Option<&FragmentBody> {
        self.fragment.as_ref()
    }

    /// Owner, name and value when this element is an attribute.
    pub fn attribute_data(&self) -> Option<&AttrData> {
        self.attr.as_ref()
    }
}
