//! The element store: creation, attribution, containment, linking and
//! adjacency. Every mutation is expressed as an [`Op`] and funnels through
//! [`Store::apply`], which is what the operation log records and replays.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::element::{AttrData, Element, ElementKind, Endpoints};
use crate::error::{StoreError, StoreResult};
use crate::id::{is_valid_name, is_valid_token, ElementId};
use crate::knowledge::KnowledgeFragment;
use crate::logic::{self, ElemRef, InferenceRule, PredicateDef};
use crate::profile::ValidationProfile;
use crate::registry::Registry;
use crate::sets::{IdentityMode, SetOp, SetSpecArg};
use crate::value::Value;

/// Reserved attribute naming the registered function of a Function element.
pub const FUNCTION_ATTR: &str = "agx.fn";

/// A mutation with its full arguments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Op {
    CreateElement {
        kind: ElementKind,
        token: Option<String>,
    },
    SetAttribute {
        owner: ElementId,
        name: String,
        value: Value,
    },
    AddMember {
        container: ElementId,
        member: ElementId,
    },
    CreateLink {
        kind: ElementKind,
        from: Vec<ElementId>,
        to: Vec<ElementId>,
        directed: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        token: Option<String>,
    },
    SetAdjacent {
        a: ElementId,
        b: ElementId,
    },
    DeleteElement {
        id: ElementId,
    },
    MarkSet {
        container: ElementId,
        spec: SetSpecArg,
    },
    SetOperation {
        op: SetOp,
        left: ElementId,
        right: ElementId,
        identity: IdentityMode,
    },
    Materialize {
        container: ElementId,
        index: u64,
    },
    AttachFragment {
        owner: ElementId,
        fragment: KnowledgeFragment,
    },
    AddDerivation {
        src: ElementId,
        dst: ElementId,
        relation: String,
        detail: Vec<ElementId>,
    },
    RegisterPredicate {
        name: String,
        definition: PredicateDef,
    },
    RegisterRule {
        rule: InferenceRule,
    },
}

/// What an applied [`Op`] produced.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum OpOutput {
    Unit,
    Id(ElementId),
}

impl OpOutput {
    pub fn id(self) -> Option<ElementId> {
        match self {
            OpOutput::Id(id) => Some(id),
            OpOutput::Unit => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Store {
    pub(crate) elements: BTreeMap<ElementId, Element>,
    tokens: BTreeMap<String, ElementId>,
    pub(crate) adjacency: Vec<(ElementId, ElementId)>,
    adjacency_index: HashSet<(ElementId, ElementId)>,
    next_id: u128,
    generation: u64,
    profile: ValidationProfile,
    pub(crate) predicates: BTreeMap<String, PredicateDef>,
    pub(crate) rules: BTreeMap<String, InferenceRule>,
    registry: Registry,
    recording: Option<Vec<Op>>,
}

impl Default for Store {
    fn default() -> Self {
        Store::new()
    }
}

impl Store {
    pub fn new() -> Self {
        Store::with_registry(Registry::bundled())
    }

    pub fn with_registry(registry: Registry) -> Self {
        Store {
            elements: BTreeMap::new(),
            tokens: BTreeMap::new(),
            adjacency: Vec::new(),
            adjacency_index: HashSet::new(),
            next_id: 1,
            generation: 0,
            profile: ValidationProfile::GeneralizedLogicalArchigraph,
            predicates: BTreeMap::new(),
            rules: BTreeMap::new(),
            registry,
            recording: None,
        }
    }

    /// A fresh store sharing this store's registry and profile.
    pub fn empty_like(&self) -> Self {
        let mut s = Store::with_registry(self.registry.clone());
        s.profile = self.profile;
        s
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn registry_mut(&mut self) -> &mut Registry {
        &mut self.registry
    }

    pub fn profile(&self) -> ValidationProfile {
        self.profile
    }

    pub fn set_profile(&mut self, profile: ValidationProfile) {
        self.profile = profile;
    }

    /// Bumped on every successful mutation.
    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub(crate) fn next_id_value(&self) -> u128 {
        self.next_id
    }

    pub(crate) fn set_next_id(&mut self, next: u128) {
        self.next_id = self.next_id.max(next);
    }

    // ---------------------------------------------------------------- journal

    /// Starts capturing applied ops; see [`Store::take_recorded`].
    pub fn start_recording(&mut self) {
        if self.recording.is_none() {
            self.recording = Some(Vec::new());
        }
    }

    /// Drains the captured ops and stops recording.
    pub fn take_recorded(&mut self) -> Vec<Op> {
        self.recording.take().unwrap_or_default()
    }

    /// Applies one mutation.
    pub fn apply(&mut self, op: Op) -> StoreResult<OpOutput> {
        let out = match &op {
            Op::CreateElement { kind, token } => {
                if *kind == ElementKind::Attribute {
                    return Err(StoreError::AttributeNeedsOwner);
                }
                OpOutput::Id(self.insert_element(*kind, token.clone())?)
            }
            Op::SetAttribute { owner, name, value } => {
                if name.starts_with("agx.") && self.countable_owner(*owner).is_some() {
                    return Err(StoreError::ManagedElement(*owner));
                }
                OpOutput::Id(self.do_set_attribute(*owner, name, value.clone())?)
            }
            Op::AddMember { container, member } => {
                self.check_unmanaged(*container)?;
                self.do_add_member(*container, *member)?;
                OpOutput::Unit
            }
            Op::CreateLink {
                kind,
                from,
                to,
                directed,
                token,
            } => OpOutput::Id(self.do_create_link(*kind, from, to, *directed, token.as_deref())?),
            Op::SetAdjacent { a, b } => {
                self.do_set_adjacent(*a, *b)?;
                OpOutput::Unit
            }
            Op::DeleteElement { id } => {
                let part = match &self.element(*id)?.attr {
                    Some(d) if d.name.starts_with("agx.") => d.owner,
                    _ => *id,
                };
                if self.countable_owner(part).is_some() {
                    return Err(StoreError::ManagedElement(*id));
                }
                self.do_delete(*id)?;
                OpOutput::Unit
            }
            Op::MarkSet { container, spec } => {
                self.check_unmanaged(*container)?;
                self.do_mark_set(*container, spec)?;
                OpOutput::Unit
            }
            Op::SetOperation {
                op,
                left,
                right,
                identity,
            } => OpOutput::Id(self.do_set_operation(*op, *left, *right, *identity)?),
            Op::Materialize { container, index } => {
                OpOutput::Id(self.do_materialize(*container, *index)?)
            }
            Op::AttachFragment { owner, fragment } => {
                self.do_attach_fragment(*owner, fragment)?;
                OpOutput::Unit
            }
            Op::AddDerivation {
                src,
                dst,
                relation,
                detail,
            } => OpOutput::Id(self.do_add_derivation(*src, *dst, relation, detail)?),
            Op::RegisterPredicate { name, definition } => {
                self.do_register_predicate(name, definition.clone())?;
                OpOutput::Unit
            }
            Op::RegisterRule { rule } => {
                self.do_register_rule(rule.clone())?;
                OpOutput::Unit
            }
        };
        self.generation += 1;
        if let Some(rec) = self.recording.as_mut() {
            rec.push(op);
        }
        Ok(out)
    }

    fn expect_id(out: StoreResult<OpOutput>) -> StoreResult<ElementId> {
        out.map(|o| o.id().expect("op yields an id"))
    }

    // ------------------------------------------------------------ public ops

    pub fn create_element(
        &mut self,
        kind: ElementKind,
        token: Option<&str>,
    ) -> StoreResult<ElementId> {
        Self::expect_id(self.apply(Op::CreateElement {
            kind,
            token: token.map(str::to_string),
        }))
    }

    /// Creates a Function element bound to the registered function `name`.
    pub fn create_function(&mut self, name: &str, token: Option<&str>) -> StoreResult<ElementId> {
        if self.registry.function(name).is_none() {
            return Err(StoreError::UnregisteredFunction(name.to_string()));
        }
        let id = self.create_element(ElementKind::Function, token)?;
        self.set_attribute(id, FUNCTION_ATTR, Value::text(name))?;
        Ok(id)
    }

    /// Sets `name` on `owner`. Re-setting an existing name replaces the value
    /// and keeps the attribute's id.
    pub fn set_attribute(
        &mut self,
        owner: ElementId,
        name: &str,
        value: Value,
    ) -> StoreResult<ElementId> {
        Self::expect_id(self.apply(Op::SetAttribute {
            owner,
            name: name.to_string(),
            value,
        }))
    }

    pub fn add_member(&mut self, container: ElementId, member: ElementId) -> StoreResult<()> {
        self.apply(Op::AddMember { container, member }).map(drop)
    }

    pub fn create_link(
        &mut self,
        kind: ElementKind,
        from: &[ElementId],
        to: &[ElementId],
        directed: bool,
    ) -> StoreResult<ElementId> {
        self.create_named_link(kind, None, from, to, directed)
    }

    pub fn create_named_link(
        &mut self,
        kind: ElementKind,
        token: Option<&str>,
        from: &[ElementId],
        to: &[ElementId],
        directed: bool,
    ) -> StoreResult<ElementId> {
        Self::expect_id(self.apply(Op::CreateLink {
            kind,
            from: from.to_vec(),
            to: to.to_vec(),
            directed,
            token: token.map(str::to_string),
        }))
    }

    pub fn set_adjacent(&mut self, a: ElementId, b: ElementId) -> StoreResult<()> {
        self.apply(Op::SetAdjacent { a, b }).map(drop)
    }

    /// Tombstones an element. References to it are left in place and show up
    /// as dangling references in validation.
    pub fn delete_element(&mut self, id: ElementId) -> StoreResult<()> {
        self.apply(Op::DeleteElement { id }).map(drop)
    }

    pub fn register_predicate(
        &mut self,
        name: &str,
        arity: usize,
        definition: PredicateDef,
    ) -> StoreResult<()> {
        if definition.params.len() != arity {
            return Err(StoreError::ArityMismatch {
                name: name.to_string(),
                expected: arity,
                got: definition.params.len(),
            });
        }
        self.apply(Op::RegisterPredicate {
            name: name.to_string(),
            definition,
        })
        .map(drop)
    }

    pub fn register_rule(&mut self, rule: InferenceRule) -> StoreResult<()> {
        self.apply(Op::RegisterRule { rule }).map(drop)
    }

    // ------------------------------------------------------------------ reads

    pub fn contains(&self, id: ElementId) -> bool {
        self.elements.contains_key(&id)
    }

    pub fn get(&self, id: ElementId) -> Option<&Element> {
        self.elements.get(&id)
    }

    pub fn element(&self, id: ElementId) -> StoreResult<&Element> {
        self.elements.get(&id).ok_or(StoreError::NoSuchElement(id))
    }

    pub fn kind(&self, id: ElementId) -> StoreResult<ElementKind> {
        self.element(id).map(|e| e.kind)
    }

    /// Live elements including attributes, in id order.
    pub fn elements(&self) -> impl Iterator<Item = &Element> {
        self.elements.values()
    }

    /// Live non-attribute elements, in id order.
    pub fn nodes(&self) -> impl Iterator<Item = &Element> {
        self.elements
            .values()
            .filter(|e| e.kind != ElementKind::Attribute)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn lookup(&self, token: &str) -> Option<ElementId> {
        self.tokens.get(token).copied()
    }

    pub fn token_of(&self, id: ElementId) -> Option<&str> {
        self.elements.get(&id).and_then(|e| e.token.as_deref())
    }

    pub fn resolve(&self, r: &ElemRef) -> StoreResult<ElementId> {
        match r {
            ElemRef::Token(t) => self
                .lookup(t)
                .ok_or_else(|| StoreError::UnknownToken(t.clone())),
            ElemRef::Id(id) => {
                self.element(*id)?;
                Ok(*id)
            }
        }
    }

    /// `(name, value)` pairs of `owner`'s attributes in store order.
    pub fn attributes(&self, owner: ElementId) -> Vec<(&str, &Value)> {
        let Some(e) = self.elements.get(&owner) else {
            return Vec::new();
        };
        e.attributes
            .iter()
            .filter_map(|a| self.elements.get(a).and_then(|a| a.attr.as_ref()))
            .map(|d| (d.name.as_str(), &d.value))
            .collect()
    }

    pub fn attribute(&self, owner: ElementId, name: &str) -> Option<&Value> {
        self.attribute_id(owner, name)
            .and_then(|a| self.elements.get(&a))
            .and_then(|a| a.attr.as_ref())
            .map(|d| &d.value)
    }

    pub fn attribute_id(&self, owner: ElementId, name: &str) -> Option<ElementId> {
        let e = self.elements.get(&owner)?;
        e.attributes.iter().copied().find(|a| {
            self.elements
                .get(a)
                .and_then(|a| a.attr.as_ref())
                .is_some_and(|d| d.name == name)
        })
    }

    /// Registered function name of a Function element.
    pub fn function_ref(&self, id: ElementId) -> Option<&str> {
        match self.elements.get(&id)?.kind {
            ElementKind::Function => self.attribute(id, FUNCTION_ATTR).and_then(Value::as_text),
            _ => None,
        }
    }

    /// Recorded adjacency pairs in insertion order.
    pub fn adjacency_pairs(&self) -> &[(ElementId, ElementId)] {
        &self.adjacency
    }

    /// Raw directed relation.
    pub fn adjacent_directed(&self, a: ElementId, b: ElementId) -> bool {
        self.adjacency_index.contains(&(a, b))
    }

    /// Symmetric closure of the recorded pairs.
    pub fn adjacent(&self, a: ElementId, b: ElementId) -> bool {
        self.adjacent_directed(a, b) || self.adjacent_directed(b, a)
    }

    /// Neighbours under symmetric adjacency, each once, in pair insertion order.
    pub fn neighbors(&self, a: ElementId) -> Vec<ElementId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &(x, y) in &self.adjacency {
            let other = if x == a {
                y
            } else if y == a {
                x
            } else {
                continue;
            };
            if seen.insert(other) {
                out.push(other);
            }
        }
        out
    }

    /// Containers that list `id` as a member.
    pub fn containers_of(&self, id: ElementId) -> Vec<ElementId> {
        self.elements
            .values()
            .filter(|e| e.members.contains(&id))
            .map(|e| e.id)
            .collect()
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDef> {
        self.predicates.get(name)
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&str, &PredicateDef)> {
        self.predicates.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn rule(&self, name: &str) -> Option<&InferenceRule> {
        self.rules.get(name)
    }

    pub fn rules(&self) -> impl Iterator<Item = &InferenceRule> {
        self.rules.values()
    }

    // -------------------------------------------------------------- internals

    fn fresh_id(&mut self) -> ElementId {
        let id = ElementId(self.next_id);
        self.next_id += 1;
        id
    }

    pub(crate) fn insert_element(
        &mut self,
        kind: ElementKind,
        token: Option<String>,
    ) -> StoreResult<ElementId> {
        let id = self.fresh_id_checked(token.as_deref())?;
        self.insert_with_id(id, kind, token);
        Ok(id)
    }

    fn fresh_id_checked(&mut self, token: Option<&str>) -> StoreResult<ElementId> {
        if let Some(t) = token {
            self.check_token(t)?;
        }
        Ok(self.fresh_id())
    }

    pub(crate) fn check_token(&self, t: &str) -> StoreResult<()> {
        if !is_valid_token(t) {
            return Err(StoreError::InvalidToken(t.to_string()));
        }
        if self.tokens.contains_key(t) {
            return Err(StoreError::DuplicateToken(t.to_string()));
        }
        Ok(())
    }

    /// Inserts an element under a caller-chosen id; used by import and
    /// snapshot loading.
    pub(crate) fn insert_with_id(
        &mut self,
        id: ElementId,
        kind: ElementKind,
        token: Option<String>,
    ) {
        if let Some(t) = &token {
            self.tokens.insert(t.clone(), id);
        }
        self.next_id = self.next_id.max(id.0 + 1);
        self.elements.insert(id, Element::new(id, kind, token));
    }

    pub(crate) fn element_mut(&mut self, id: ElementId) -> StoreResult<&mut Element> {
        self.elements
            .get_mut(&id)
            .ok_or(StoreError::NoSuchElement(id))
    }

    pub(crate) fn check_value(&self, value: &Value) -> StoreResult<()> {
        match value {
            Value::Real(r) if !r.is_finite() => Err(StoreError::NonFiniteReal),
            Value::Ref(target) => match self.kind(*target)? {
                ElementKind::Attribute => Err(StoreError::AttributeNotAllowed(*target)),
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }

    pub(crate) fn do_set_attribute(
        &mut self,
        owner: ElementId,
        name: &str,
        value: Value,
    ) -> StoreResult<ElementId> {
        if self.kind(owner)? == ElementKind::Attribute {
            return Err(StoreError::AttributeOnAttribute);
        }
        if !is_valid_name(name) {
            return Err(StoreError::InvalidName(name.to_string()));
        }
        self.check_value(&value)?;
        self.write_attribute(owner, name, value, None)
    }

    /// Writes without validation; `id` pins the attribute id of a new attribute.
    pub(crate) fn write_attribute(
        &mut self,
        owner: ElementId,
        name: &str,
        value: Value,
        id: Option<ElementId>,
    ) -> StoreResult<ElementId> {
        if let Some(existing) = self.attribute_id(owner, name) {
            let a = self.element_mut(existing)?;
            a.attr.as_mut().expect("attribute payload").value = value;
            return Ok(existing);
        }
        let aid = match id {
            Some(id) => {
                self.next_id = self.next_id.max(id.0 + 1);
                id
            }
            None => self.fresh_id(),
        };
        let mut a = Element::new(aid, ElementKind::Attribute, None);
        a.attr = Some(AttrData {
            owner,
            name: name.to_string(),
            value,
        });
        self.elements.insert(aid, a);
        self.element_mut(owner)?.attributes.push(aid);
        Ok(aid)
    }

    pub(crate) fn check_unmanaged(&self, container: ElementId) -> StoreResult<()> {
        use crate::sets::SetSpec;
        match self.element(container)?.set_spec {
            Some(SetSpec::Countable { .. }) | Some(SetSpec::Derived { .. }) => {
                Err(StoreError::ManagedContainer(container))
            }
            _ if self.countable_owner(container).is_some() => {
                Err(StoreError::ManagedContainer(container))
            }
            _ => Ok(()),
        }
    }

    /// The countable set whose inner structure (type and object
    /// metavertices, type descriptors, materialized objects) includes `id`.
    pub(crate) fn countable_owner(&self, id: ElementId) -> Option<ElementId> {
        use crate::sets::SetSpec;
        self.elements.values().find_map(|e| match &e.set_spec {
            Some(SetSpec::Countable {
                types,
                objects,
                cache,
                ..
            }) if id == *types
                || id == *objects
                || cache.values().any(|&o| o == id)
                || self.elements.get(types).is_some_and(|t| t.members.contains(&id)) =>
            {
                Some(e.id())
            }
            _ => None,
        })
    }

    pub(crate) fn do_add_member(
        &mut self,
        container: ElementId,
        member: ElementId,
    ) -> StoreResult<()> {
        let ck = self.kind(container)?;
        if !ck.is_container() {
            return Err(StoreError::NotAContainer(container, ck));
        }
        if self.kind(member)? == ElementKind::Attribute {
            return Err(StoreError::AttributeNotAllowed(member));
        }
        if member == container || self.reaches(member, container) {
            return Err(StoreError::ContainmentCycle { container, member });
        }
        self.element_mut(container)?.members.insert(member);
        Ok(())
    }

    /// Whether `to` is reachable from `from` through members.
    pub fn reaches(&self, from: ElementId, to: ElementId) -> bool {
        let mut stack = vec![from];
        let mut seen = HashSet::new();
        while let Some(x) = stack.pop() {
            if !seen.insert(x) {
                continue;
            }
            if let Some(e) = self.elements.get(&x) {
                for &m in &e.members {
                    if m == to {
                        return true;
                    }
                    stack.push(m);
                }
            }
        }
        false
    }

    pub(crate) fn check_endpoints(&self, from: &[ElementId], to: &[ElementId]) -> StoreResult<()> {
        if from.is_empty() || to.is_empty() {
            return Err(StoreError::EmptyEndpointList);
        }
        for &x in from.iter().chain(to) {
            if self.kind(x)? == ElementKind::Attribute {
                return Err(StoreError::AttributeEndpoint(x));
            }
        }
        Ok(())
    }

    pub(crate) fn do_create_link(
        &mut self,
        kind: ElementKind,
        from: &[ElementId],
        to: &[ElementId],
        directed: bool,
        token: Option<&str>,
    ) -> StoreResult<ElementId> {
        if !kind.is_link() {
            return Err(StoreError::NotALinkKind(kind));
        }
        self.check_endpoints(from, to)?;
        let id = self.insert_element(kind, token.map(str::to_string))?;
        self.element_mut(id)?.endpoints = Some(Endpoints {
            from: from.to_vec(),
            to: to.to_vec(),
            directed,
        });
        Ok(id)
    }

    pub(crate) fn set_endpoints_unchecked(
        &mut self,
        link: ElementId,
        ends: Endpoints,
    ) -> StoreResult<()> {
        self.element_mut(link)?.endpoints = Some(ends);
        Ok(())
    }

    pub(crate) fn do_set_adjacent(&mut self, a: ElementId, b: ElementId) -> StoreResult<()> {
        if a == b {
            return Err(StoreError::SelfAdjacency);
        }
        for x in [a, b] {
            if self.kind(x)? == ElementKind::Attribute {
                return Err(StoreError::AttributeNotAllowed(x));
            }
        }
        self.push_adjacency(a, b);
        Ok(())
    }

    pub(crate) fn push_adjacency(&mut self, a: ElementId, b: ElementId) {
        if self.adjacency_index.insert((a, b)) {
            self.adjacency.push((a, b));
        }
    }

    pub(crate) fn remove_attribute(&mut self, id: ElementId) {
        let _ = self.do_delete(id);
    }

    fn do_delete(&mut self, id: ElementId) -> StoreResult<()> {
        let e = self
            .elements
            .remove(&id)
            .ok_or(StoreError::NoSuchElement(id))?;
        if let Some(t) = &e.token {
            self.tokens.remove(t);
        }
        if let Some(d) = &e.attr {
            if let Some(owner) = self.elements.get_mut(&d.owner) {
                owner.attributes.retain(|a| *a != id);
            }
        }
        for a in e.attributes {
            self.elements.remove(&a);
        }
        Ok(())
    }

    fn do_register_predicate(&mut self, name: &str, def: PredicateDef) -> StoreResult<()> {
        if !is_valid_token(name) {
            return Err(StoreError::InvalidName(name.to_string()));
        }
        if self.predicates.contains_key(name) || logic::is_builtin_predicate(name) {
            return Err(StoreError::DuplicatePredicate(name.to_string()));
        }
        let bound: BTreeSet<&str> = def.params.iter().map(String::as_str).collect();
        if let Some(v) = def
            .body
            .free_variables()
            .into_iter()
            .find(|v| !bound.contains(v.as_str()))
        {
            return Err(StoreError::UnboundVariable(v));
        }
        self.predicates.insert(name.to_string(), def);
        Ok(())
    }

    fn do_register_rule(&mut self, rule: InferenceRule) -> StoreResult<()> {
        if !is_valid_token(&rule.name) {
            return Err(StoreError::InvalidName(rule.name.clone()));
        }
        if self.rules.contains_key(&rule.name) {
            return Err(StoreError::DuplicateRule(rule.name.clone()));
        }
        rule.check_bound()?;
        self.rules.insert(rule.name.clone(), rule);
        Ok(())
    }
}
