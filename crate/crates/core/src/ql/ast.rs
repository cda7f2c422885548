use std::fmt;

use crate::element::ElementKind;
use crate::logic::{ElemRef, Formula, InferenceRule, Term};
use crate::sets::{IdentityMode, SetOp};
use crate::value::Value;

/// Byte range in the source text. Spans never take part in AST equality,
/// so a parsed and a hand-built tree compare equal.
#[derive(Copy, Clone, Default, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.start, other.end)
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl fmt::Debug for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Query {
    Match(MatchQuery),
    Eval(EvalQuery),
    Infer(InferQuery),
    Set(SetQuery),
    Define(Define),
}

impl Query {
    pub fn span(&self) -> Span {
        match self {
            Query::Match(q) => q.span,
            Query::Eval(q) => q.span,
            Query::Infer(q) => q.span,
            Query::Set(q) => q.span,
            Query::Define(q) => q.span,
        }
    }
}

/// `{name}` requires the attribute, `{name = literal}` also fixes its value.
#[derive(Clone, Debug, PartialEq)]
pub struct AttrConstraint {
    pub name: String,
    pub value: Option<Value>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchQuery {
    pub var: String,
    pub kind: Option<ElementKind>,
    pub constraints: Vec<AttrConstraint>,
    pub filter: Option<Formula>,
    pub returns: Vec<Term>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalQuery {
    pub formula: Formula,
    pub horizon: Option<u64>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InferItem {
    Named(String),
    Inline(InferenceRule),
}

#[derive(Clone, Debug, PartialEq)]
pub enum InferTarget {
    /// Every rule registered with the store.
    All,
    Items(Vec<InferItem>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InferQuery {
    pub target: InferTarget,
    pub max_iter: Option<usize>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SetExpr {
    Ref(ElemRef),
    Op {
        op: SetOp,
        left: Box<SetExpr>,
        right: Box<SetExpr>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SetQuery {
    /// Token bound to the resulting derived set.
    pub target: String,
    pub expr: SetExpr,
    pub identity: IdentityMode,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SetKind {
    Finite,
    Group,
    Countable(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum DefineItem {
    /// Vertex, metavertex (optionally with members).
    Element {
        kind: ElementKind,
        token: String,
        attrs: Vec<(String, Term)>,
        members: Vec<ElemRef>,
    },
    Function {
        token: String,
        function: String,
    },
    Link {
        kind: ElementKind,
        token: Option<String>,
        from: Vec<ElemRef>,
        to: Vec<ElemRef>,
        directed: bool,
        attrs: Vec<(String, Term)>,
        members: Vec<ElemRef>,
    },
    Member {
        container: ElemRef,
        members: Vec<ElemRef>,
    },
    Adjacent {
        a: ElemRef,
        b: ElemRef,
    },
    Attr {
        owner: ElemRef,
        name: String,
        value: Term,
    },
    Set {
        container: ElemRef,
        kind: SetKind,
    },
    Predicate {
        name: String,
        params: Vec<String>,
        body: Formula,
    },
    Rule(InferenceRule),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Define {
    pub item: DefineItem,
    pub span: Span,
}
