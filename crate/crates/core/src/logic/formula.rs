use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::TriBool;
use crate::canon::EqualityMode;
use crate::element::ElementKind;
use crate::error::{StoreError, StoreResult};
use crate::id::ElementId;
use crate::value::Value;

/// A reference to an element by token or by id.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElemRef {
    Token(String),
    Id(ElementId),
}

/// What an attribute reference or element comparison is about.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Subject {
    Var(String),
    Elem(ElemRef),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FnTarget {
    /// A registered function called by name.
    Named(String),
    /// A Function element; its bound function is called.
    Node(ElemRef),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Term {
    Literal(Value),
    Attr { subject: Subject, name: String },
    Var(String),
    Elem(ElemRef),
    Apply { target: FnTarget, args: Vec<Term> },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Gt,
    Lt,
    Ge,
    Le,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Gt,
        CmpOp::Lt,
        CmpOp::Ge,
        CmpOp::Le,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PredName {
    Named(String),
    /// The predicate named by a predicate-valued attribute.
    Attr {
        subject: Subject,
        attr: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Modality {
    Necessary,
    Possible,
    Known {
        agent: ElemRef,
    },
    Believed {
        agent: ElemRef,
    },
    Obligatory,
    Permitted,
    Forbidden,
    Good,
    Bad,
    Always,
    Eventually,
    Next,
    /// `body` holds at every instant before one where `goal` holds.
    Until {
        goal: Box<Formula>,
    },
}

impl Modality {
    pub fn keyword(&self) -> &'static str {
        match self {
            Modality::Necessary => "NECESSARY",
            Modality::Possible => "POSSIBLE",
            Modality::Known { .. } => "KNOWN",
            Modality::Believed { .. } => "BELIEVED",
            Modality::Obligatory => "OBLIGATORY",
            Modality::Permitted => "PERMITTED",
            Modality::Forbidden => "FORBIDDEN",
            Modality::Good => "GOOD",
            Modality::Bad => "BAD",
            Modality::Always => "ALWAYS",
            Modality::Eventually => "EVENTUALLY",
            Modality::Next => "NEXT",
            Modality::Until { .. } => "UNTIL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    Truth(TriBool),
    Compare {
        lhs: Term,
        op: CmpOp,
        rhs: Term,
    },
    Predicate {
        name: PredName,
        args: Vec<Term>,
    },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    ForAll {
        var: String,
        set: ElemRef,
        body: Box<Formula>,
    },
    Exists {
        var: String,
        set: ElemRef,
        body: Box<Formula>,
    },
    /// `var` ranges over the members of `frame`.
    Modal {
        op: Modality,
        var: String,
        frame: ElemRef,
        body: Box<Formula>,
    },
    EqualsElem {
        a: Subject,
        b: Subject,
        mode: EqualityMode,
    },
}

impl Formula {
    pub fn compare(lhs: Term, op: CmpOp, rhs: Term) -> Self {
        Formula::Compare { lhs, op, rhs }
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn forall(var: &str, set: ElemRef, body: Formula) -> Self {
        Formula::ForAll {
            var: var.to_string(),
            set,
            body: Box::new(body),
        }
    }

    pub fn exists(var: &str, set: ElemRef, body: Formula) -> Self {
        Formula::Exists {
            var: var.to_string(),
            set,
            body: Box::new(body),
        }
    }

    pub fn modal(op: Modality, var: &str, frame: ElemRef, body: Formula) -> Self {
        Formula::Modal {
            op,
            var: var.to_string(),
            frame,
            body: Box::new(body),
        }
    }

    /// Variables used but not bound by a quantifier or modal operator.
    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::Truth(_) => {}
            Formula::Compare { lhs, rhs, .. } => {
                lhs.collect_free(bound, out);
                rhs.collect_free(bound, out);
            }
            Formula::Predicate { name, args } => {
                if let PredName::Attr { subject, .. } = name {
                    subject.collect_free(bound, out);
                }
                for a in args {
                    a.collect_free(bound, out);
                }
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(fs) | Formula::Or(fs) => {
                fs.iter().for_each(|f| f.collect_free(bound, out))
            }
            Formula::ForAll { var, body, .. } | Formula::Exists { var, body, .. } => {
                bound.push(var.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            Formula::Modal { op, var, body, .. } => {
                bound.push(var.clone());
                body.collect_free(bound, out);
                if let Modality::Until { goal } = op {
                    goal.collect_free(bound, out);
                }
                bound.pop();
            }
            Formula::EqualsElem { a, b, .. } => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
        }
    }
}

impl Subject {
    fn collect_free(&self, bound: &[String], out: &mut BTreeSet<String>) {
        if let Subject::Var(v) = self {
            if !bound.contains(v) {
                out.insert(v.clone());
            }
        }
    }
}

impl Term {
    pub fn attr(var: &str, name: &str) -> Self {
        Term::Attr {
            subject: Subject::Var(var.to_string()),
            name: name.to_string(),
        }
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&[], &mut out);
        out
    }

    fn collect_free(&self, bound: &[String], out: &mut BTreeSet<String>) {
        match self {
            Term::Literal(_) | Term::Elem(_) => {}
            Term::Attr { subject, .. } => subject.collect_free(bound, out),
            Term::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Term::Apply { args, .. } => args.iter().for_each(|a| a.collect_free(bound, out)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredicateDef {
    pub params: Vec<String>,
    pub body: Formula,
}

/// One source of an inference rule: elements of `kind` (any when `None`)
/// carrying every attribute in `required_attrs` and satisfying `guard`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourcePattern {
    pub var: String,
    pub kind: Option<ElementKind>,
    pub required_attrs: Vec<String>,
    pub guard: Formula,
}

impl SourcePattern {
    pub fn new(var: &str, kind: Option<ElementKind>) -> Self {
        SourcePattern {
            var: var.to_string(),
            kind,
            required_attrs: Vec::new(),
            guard: Formula::Truth(TriBool::True),
        }
    }

    pub fn requiring(mut self, attr: &str) -> Self {
        self.required_attrs.push(attr.to_string());
        self
    }

    pub fn guarded(mut self, guard: Formula) -> Self {
        self.guard = guard;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceRule {
    pub name: String,
    pub sources: Vec<SourcePattern>,
    pub target_var: String,
    pub target_attr: String,
    pub value: Term,
}

impl InferenceRule {
    /// Every variable a guard, the target or the value uses must be bound by
    /// that source or an earlier one.
    pub fn check_bound(&self) -> StoreResult<()> {
        let mut bound = BTreeSet::new();
        for s in &self.sources {
            if !bound.insert(s.var.clone()) {
                return Err(StoreError::InvalidName(s.var.clone()));
            }
            if let Some(v) = s
                .guard
                .free_variables()
                .into_iter()
                .find(|v| !bound.contains(v))
            {
                return Err(StoreError::UnboundVariable(v));
            }
        }
        if !bound.contains(&self.target_var) {
            return Err(StoreError::UnboundVariable(self.target_var.clone()));
        }
        if let Some(v) = self
            .value
            .free_variables()
            .into_iter()
            .find(|v| !bound.contains(v))
        {
            return Err(StoreError::UnboundVariable(v));
        }
        Ok(())
    }
}

/// In-place rewriting of every element id a formula, term or rule mentions;
/// used to relabel ids when persisting and restoring definitions.
pub trait MapIds {
    fn map_ids<E>(
        &mut self,
        f: &mut impl FnMut(ElementId) -> Result<ElementId, E>,
    ) -> Result<(), E>;
}

impl MapIds for ElemRef {
    fn map_ids<E>(
        &mut self,
        f: &mut impl FnMut(ElementId) -> Result<ElementId, E>,
    ) -> Result<(), E> {
        if let ElemRef::Id(id) = self {
            *id = f(*id)?;
        }
        Ok(())
    }
}

impl MapIds for Subject {
    fn map_ids<E>(
        &mut self,
        f: &mut impl FnMut(ElementId) -> Result<ElementId, E>,
    ) -> Result<(), E> {
        match self {
            Subject::Var(_) => Ok(()),
            Subject::Elem(r) => r.map_ids(f),
        }
    }
}

impl MapIds for Term {
    fn map_ids<E>(
        &mut self,
        f: &mut impl FnMut(ElementId) -> Result<ElementId, E>,
    ) -> Result<(), E> {
        match self {
            Term::Literal(Value::Ref(id)) => *id = f(*id)?,
            Term::Literal(_) | Term::Var(_) => {}
            Term::Attr { subject, .. } => subject.map_ids(f)?,
            Term::Elem(r) => r.map_ids(f)?,
            Term::Apply { target, args } => {
                if let FnTarget::Node(r) = target {
                    r.map_ids(f)?;
                }
                for a in args {
                    a.map_ids(f)?;
                }
            }
        }
        Ok(())
    }
}

impl MapIds for Formula {
    fn map_ids<E>(
        &mut self,
        f: &mut impl FnMut(ElementId) -> Result<ElementId, E>,
    ) -> Result<(), E> {
        match self {
            Formula::Truth(_) => {}
            Formula::Compare { lhs, rhs, .. } => {
                lhs.map_ids(f)?;
                rhs.map_ids(f)?;
            }
            Formula::Predicate { name, args } => {
                if let PredName::Attr { subject, .. } = name {
                    subject.map_ids(f)?;
                }
                for a in args {
                    a.map_ids(f)?;
                }
            }
            Formula::Not(g) => g.map_ids(f)?,
            Formula::And(fs) | Formula::Or(fs) => {
                for g in fs {
                    g.map_ids(f)?;
                }
            }
            Formula::ForAll { set, body, .. } | Formula::Exists { set, body, .. } => {
                set.map_ids(f)?;
                body.map_ids(f)?;
            }
            Formula::Modal {
                op, frame, body, ..
            } => {
                match op {
                    Modality::Known { agent } | Modality::Believed { agent } => agent.map_ids(f)?,
                    Modality::Until { goal } => goal.map_ids(f)?,
                    _ => {}
                }
                frame.map_ids(f)?;
                body.map_ids(f)?;
            }
            Formula::EqualsElem { a, b, .. } => {
                a.map_ids(f)?;
                b.map_ids(f)?;
            }
        }
        Ok(())
    }
}

impl MapIds for InferenceRule {
    fn map_ids<E>(
        &mut self,
        f: &mut impl FnMut(ElementId) -> Result<ElementId, E>,
    ) -> Result<(), E> {
        for s in &mut self.sources {
            s.guard.map_ids(f)?;
        }
        self.value.map_ids(f)
    }
}
