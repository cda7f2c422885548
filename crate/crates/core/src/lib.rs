//! An in-memory store for generalized logical archigraphs: vertices, edges,
//! metavertices, metaedges and function nodes with attributes, implicit and
//! explicit sets, knowledge fragments, a three-valued logic layer, a text
//! interchange format with an operation log, and a small query language.

pub mod canon;
pub mod element;
pub mod error;
pub mod id;
pub mod knowledge;
pub mod logic;
pub mod persist;
pub mod profile;
pub mod ql;
pub mod registry;
pub mod sets;
pub mod store;
pub mod value;

pub use canon::EqualityMode;
pub use element::{Element, ElementKind, Endpoints};
pub use error::{StoreError, StoreResult};
pub use id::ElementId;
pub use knowledge::{FormalizationGroup, KnowledgeFragment};
pub use logic::TriBool;
pub use profile::{ValidationProfile, ValidationReport};
pub use registry::Registry;
pub use sets::{IdentityMode, SetOp, SetSpec, SetSpecArg};
pub use store::{Op, Store};
pub use value::Value;
