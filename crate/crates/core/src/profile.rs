//! Validation profiles and the ordinary-graph embedding.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::element::ElementKind;
use crate::id::ElementId;
use crate::logic;
use crate::sets::SetSpec;
use crate::store::{Store, FUNCTION_ATTR};
use crate::value::Value;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ValidationProfile {
    /// Elements plus a neighbourhood relation, nothing else.
    Protograph,
    /// Two element classes, no adjacency inside a class.
    OrdinaryGraph,
    /// Vertices, edges, metavertices, metaedges and attributes.
    AnnotatedMetagraph,
    /// The annotated metagraph plus function objects.
    GeneralizedLogicalArchigraph,
}

impl ValidationProfile {
    pub fn allowed_kinds(self) -> &'static [ElementKind] {
        use ElementKind::*;
        match self {
            ValidationProfile::Protograph => &[Vertex],
            ValidationProfile::OrdinaryGraph => &[Vertex, Edge],
            ValidationProfile::AnnotatedMetagraph => {
                &[Vertex, Edge, MetaVertex, MetaEdge, Attribute]
            }
            ValidationProfile::GeneralizedLogicalArchigraph => {
                &[Vertex, Edge, MetaVertex, MetaEdge, Attribute, Function]
            }
        }
    }

    pub fn admits_links(self) -> bool {
        matches!(
            self,
            ValidationProfile::AnnotatedMetagraph | ValidationProfile::GeneralizedLogicalArchigraph
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            ValidationProfile::Protograph => "protograph",
            ValidationProfile::OrdinaryGraph => "ordinary",
            ValidationProfile::AnnotatedMetagraph => "metagraph",
            ValidationProfile::GeneralizedLogicalArchigraph => "archigraph",
        }
    }
}

impl FromStr for ValidationProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "protograph" => Ok(ValidationProfile::Protograph),
            "ordinary" | "ordinary-graph" => Ok(ValidationProfile::OrdinaryGraph),
            "metagraph" | "annotated" | "annotated-metagraph" => {
                Ok(ValidationProfile::AnnotatedMetagraph)
            }
            "archigraph" | "generalized" | "gla" => {
                Ok(ValidationProfile::GeneralizedLogicalArchigraph)
            }
            other => Err(format!("unknown profile `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    KindNotAllowed(ElementKind),
    SameKindAdjacency {
        a: ElementId,
        b: ElementId,
        kind: ElementKind,
    },
    LinkNotAllowed,
    DanglingReference {
        target: ElementId,
    },
    ContainmentCycle,
    AttributeOwnership,
    SetStructure(String),
    MissingFunctionRef,
    UnknownPredicate(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub element: Option<ElementId>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = self
            .element
            .map(|e| e.to_hex())
            .unwrap_or_else(|| "-".into());
        match &self.kind {
            ViolationKind::KindNotAllowed(k) => write!(f, "{at}: kind {k} not allowed by profile"),
            ViolationKind::SameKindAdjacency { a, b, kind } => {
                write!(f, "{a}: adjacent to {b} of the same kind {kind}")
            }
            ViolationKind::LinkNotAllowed => {
                write!(f, "{at}: link endpoints not allowed by profile")
            }
            ViolationKind::DanglingReference { target } => {
                write!(f, "{at}: dangling reference to {target}")
            }
            ViolationKind::ContainmentCycle => write!(f, "{at}: containment cycle"),
            ViolationKind::AttributeOwnership => write!(f, "{at}: attribute ownership broken"),
            ViolationKind::SetStructure(m) => write!(f, "{at}: {m}"),
            ViolationKind::MissingFunctionRef => {
                write!(f, "{at}: function element without {FUNCTION_ATTR}")
            }
            ViolationKind::UnknownPredicate(p) => write!(f, "{at}: unknown predicate `{p}`"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationReport {
    pub profile: ValidationProfile,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_conforming(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_conforming() {
            return writeln!(f, "conforming");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

impl Store {
    /// Lists every violation of `profile` and of the store invariants.
    pub fn validate(&self, profile: ValidationProfile) -> ValidationReport {
        let allowed = profile.allowed_kinds();
        let mut out = Vec::new();
        let mut push =
            |element: Option<ElementId>, kind: ViolationKind| out.push(Violation { element, kind });

        for e in self.elements() {
            let id = e.id();
            if !allowed.contains(&e.kind()) {
                push(Some(id), ViolationKind::KindNotAllowed(e.kind()));
            }
            if let Some(d) = e.attribute_data() {
                let owned = self
                    .get(d.owner)
                    .is_some_and(|o| o.attribute_ids().contains(&id));
                if !owned {
                    push(Some(id), ViolationKind::AttributeOwnership);
                }
                match &d.value {
                    Value::Ref(t) if !self.contains(*t) => {
                        push(Some(id), ViolationKind::DanglingReference { target: *t })
                    }
                    Value::Predicate(p)
                        if self.predicate(p).is_none() && !logic::is_builtin_predicate(p) =>
                    {
                        push(Some(id), ViolationKind::UnknownPredicate(p.clone()))
                    }
                    _ => {}
                }
            }
            for &m in e.members() {
                if !self.contains(m) {
                    push(Some(id), ViolationKind::DanglingReference { target: m });
                }
            }
            if self.reaches(id, id) {
                push(Some(id), ViolationKind::ContainmentCycle);
            }
            if let Some(ends) = e.endpoints() {
                for &x in ends.from.iter().chain(&ends.to) {
                    if !self.contains(x) {
                        push(Some(id), ViolationKind::DanglingReference { target: x });
                    }
                }
                if !profile.admits_links() {
                    push(Some(id), ViolationKind::LinkNotAllowed);
                }
            }
            if e.kind() == ElementKind::Function && self.function_ref(id).is_none() {
                push(Some(id), ViolationKind::MissingFunctionRef);
            }
            match e.set_spec() {
                Some(SetSpec::Derived { left, right, .. }) => {
                    for op in [left, right] {
                        match self.get(*op).and_then(|o| o.set_spec()) {
                            Some(SetSpec::Finite) | Some(SetSpec::Derived { .. }) => {}
                            _ if !self.contains(*op) => {
                                push(Some(id), ViolationKind::DanglingReference { target: *op })
                            }
                            _ => push(
                                Some(id),
                                ViolationKind::SetStructure(
                                    "derived operand is not a finite set".into(),
                                ),
                            ),
                        }
                    }
                    if e.members().iter().any(|m| m != left && m != right) {
                        push(
                            Some(id),
                            ViolationKind::SetStructure("derived set has extra members".into()),
                        );
                    }
                }
                Some(SetSpec::Countable { types, objects, .. }) => {
                    let expected: BTreeSet<ElementId> = [*types, *objects].into_iter().collect();
                    if e.members() != &expected {
                        push(
                            Some(id),
                            ViolationKind::SetStructure(
                                "countable set must hold exactly its two inner metavertices".into(),
                            ),
                        );
                    }
                }
                _ => {}
            }
        }
        let mut seen = HashSet::new();
        for &(a, b) in self.adjacency_pairs() {
            match (self.get(a), self.get(b)) {
                (Some(x), Some(y)) => {
                    if profile == ValidationProfile::OrdinaryGraph
                        && x.kind() == y.kind()
                        && seen.insert((a, b))
                    {
                        push(
                            Some(a),
                            ViolationKind::SameKindAdjacency {
                                a,
                                b,
                                kind: x.kind(),
                            },
                        );
                    }
                }
                (None, _) => push(Some(b), ViolationKind::DanglingReference { target: a }),
                (_, None) => push(Some(a), ViolationKind::DanglingReference { target: b }),
            }
        }
        ValidationReport {
            profile,
            violations: out,
        }
    }
}

/// Encodes a simple undirected graph on `n` vertices as a two-kind
/// protograph: one Vertex element per vertex, one Edge element per edge,
/// adjacent to both of its ends. Returns the vertex elements in index order.
pub fn encode_simple_graph(n: usize, edges: &[(usize, usize)]) -> (Store, Vec<ElementId>) {
    let mut s = Store::new();
    s.set_profile(ValidationProfile::OrdinaryGraph);
    let vs: Vec<ElementId> = (0..n)
        .map(|_| {
            s.create_element(ElementKind::Vertex, None)
                .expect("fresh vertex")
        })
        .collect();
    for &(a, b) in edges {
        let e = s
            .create_element(ElementKind::Edge, None)
            .expect("fresh edge");
        s.set_adjacent(vs[a], e).expect("vertex-edge adjacency");
        s.set_adjacent(e, vs[b]).expect("edge-vertex adjacency");
    }
    (s, vs)
}

/// Reads back the edge set of a two-kind protograph: every Edge element must
/// neighbour exactly two Vertex elements. Pairs are ordered `(min, max)`.
pub fn decode_simple_graph(store: &Store) -> Result<BTreeSet<(ElementId, ElementId)>, String> {
    let mut edges = BTreeSet::new();
    for e in store.nodes().filter(|e| e.kind() == ElementKind::Edge) {
        let ends: Vec<ElementId> = store
            .neighbors(e.id())
            .into_iter()
            .filter(|n| {
                store
                    .get(*n)
                    .is_some_and(|x| x.kind() == ElementKind::Vertex)
            })
            .collect();
        match ends.as_slice() {
            [a, b] => {
                edges.insert(((*a).min(*b), (*a).max(*b)));
            }
            other => {
                return Err(format!(
                    "edge {} has {} vertex neighbours",
                    e.id(),
                    other.len()
                ))
            }
        }
    }
    Ok(edges)
}
