use thiserror::Error;

use crate::element::ElementKind;
use crate::id::ElementId;

/// Errors raised by store mutations and queries over elements, sets and
/// knowledge fragments.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StoreError {
    #[error("token `{0}` is already bound")]
    DuplicateToken(String),
    #[error("`{0}` is not a valid token")]
    InvalidToken(String),
    #[error("`{0}` is not a valid attribute or relation name")]
    InvalidName(String),
    #[error("attributes are created through set_attribute")]
    AttributeNeedsOwner,
    #[error("no such element: {0}")]
    NoSuchElement(ElementId),
    #[error("no element bound to token `{0}`")]
    UnknownToken(String),
    #[error("attributes cannot carry attributes")]
    AttributeOnAttribute,
    #[error("attribute {0} cannot take part in membership, adjacency, links or references")]
    AttributeNotAllowed(ElementId),
    #[error("{0} is a {1}, not a metavertex or metaedge")]
    NotAContainer(ElementId, ElementKind),
    #[error("adding {member} to {container} would create a containment cycle")]
    ContainmentCycle {
        container: ElementId,
        member: ElementId,
    },
    #[error("container {0} is managed by its set specification")]
    ManagedContainer(ElementId),
    #[error("element {0} belongs to the inner structure of a countable set")]
    ManagedElement(ElementId),
    #[error("container {0} must be empty for this set specification")]
    ContainerNotEmpty(ElementId),
    #[error("link endpoint lists must be nonempty")]
    EmptyEndpointList,
    #[error("attribute {0} cannot be a link endpoint")]
    AttributeEndpoint(ElementId),
    #[error("{0} is not an edge or metaedge kind")]
    NotALinkKind(ElementKind),
    #[error("an element cannot be adjacent to itself")]
    SelfAdjacency,
    #[error("canonicalization exceeded depth {0}")]
    DepthLimitExceeded(usize),
    #[error("real values must be finite")]
    NonFiniteReal,
    #[error("generator `{0}` is not registered")]
    UnregisteredGenerator(String),
    #[error("{0} does not carry a finite or derived set specification")]
    OperandNotASet(ElementId),
    #[error("{0} is a countable set; set algebra is defined over finite sets only")]
    CountableOperand(ElementId),
    #[error("{0} does not carry a set specification")]
    NotASet(ElementId),
    #[error("no next member")]
    NoNextMember,
    #[error("cursor was taken at generation {cursor}, store is at {store}")]
    StaleCursor { cursor: u64, store: u64 },
    #[error("fragment kind `{kind}` belongs to group {expected}, not {declared}")]
    GroupMismatch {
        kind: String,
        expected: String,
        declared: String,
    },
    #[error("{0} is a {1}; fragments attach to vertices and metavertices")]
    NotAFragmentCarrier(ElementId, ElementKind),
    #[error("unknown fragment kind `{0}`")]
    UnknownKind(String),
    #[error("{0} carries no knowledge fragment")]
    NoFragment(ElementId),
    #[error("no converter registered for {from} -> {to}")]
    NoConverter { from: String, to: String },
    #[error("converter {from} -> {to} failed: {message}")]
    ConversionFailed {
        from: String,
        to: String,
        message: String,
    },
    #[error("predicate `{0}` is already registered")]
    DuplicatePredicate(String),
    #[error("rule `{0}` is already registered")]
    DuplicateRule(String),
    #[error("`{name}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("function `{0}` is not registered")]
    UnregisteredFunction(String),
    #[error("{0} is not a function element")]
    NotAFunction(ElementId),
    #[error("function `{0}` is undefined for the given arguments")]
    FunctionUndefined(String),
    #[error("predicate `{0}` is not registered")]
    UnknownPredicate(String),
    #[error("temporal frame {0} is not totally ordered by a numeric `t` attribute")]
    UnorderedTemporalFrame(ElementId),
    #[error("frame {0} has no members")]
    EmptyFrame(ElementId),
    #[error("rules `{first}` and `{second}` assign different values to {attribute} of {element}")]
    ConflictingAssignment {
        element: ElementId,
        attribute: String,
        first: String,
        second: String,
    },
    #[error("no fixpoint after {0} rounds")]
    MaxIterationsExceeded(usize),
}

pub type StoreResult<T> = Result<T, StoreError>;
