//! Implicit and explicit sets: adjacency groups, finite sets, countable sets
//! backed by generators, and derived sets defined by union, intersection or
//! subtraction of other sets.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::canon::{Canonicalizer, EqualityMode};
use crate::element::ElementKind;
use crate::error::{StoreError, StoreResult};
use crate::id::ElementId;
use crate::store::{Op, Store};
use crate::value::Value;

/// Marks the two inner metavertices of a countable set ("types", "objects").
pub const ROLE_ATTR: &str = "agx.role";
/// Index of a materialized countable-set object.
pub const INDEX_ATTR: &str = "agx.index";
/// Name of an object type held in a countable set's type metavertex.
pub const TYPE_ATTR: &str = "agx.type";

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SetOp {
    Union,
    Intersection,
    Subtraction,
}

impl SetOp {
    pub fn name(self) -> &'static str {
        match self {
            SetOp::Union => "union",
            SetOp::Intersection => "intersect",
            SetOp::Subtraction => "subtract",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "union" => Some(SetOp::Union),
            "intersect" => Some(SetOp::Intersection),
            "subtract" => Some(SetOp::Subtraction),
            _ => None,
        }
    }
}

/// Identity criterion for set algebra.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IdentityMode {
    ById,
    ByValueEquality,
}

impl IdentityMode {
    pub fn name(self) -> &'static str {
        match self {
            IdentityMode::ById => "byid",
            IdentityMode::ByValueEquality => "byvalue",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "byid" => Some(IdentityMode::ById),
            "byvalue" => Some(IdentityMode::ByValueEquality),
            _ => None,
        }
    }
}

/// Set specification carried by a metavertex or metaedge.
#[derive(Clone, Debug, PartialEq)]
pub enum SetSpec {
    /// The adjacency groups of the container's members.
    AdjacencyGroup,
    /// The first-level members.
    Finite,
    Countable {
        types: ElementId,
        objects: ElementId,
        generator: String,
        /// Materialized objects by index.
        cache: BTreeMap<u64, ElementId>,
    },
    Derived {
        op: SetOp,
        left: ElementId,
        right: ElementId,
        identity: IdentityMode,
    },
}

/// What callers pass to [`Store::mark_set`]; inner structure is built by the store.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetSpecArg {
    AdjacencyGroup,
    Finite,
    Countable {
        generator: String,
    },
    Derived {
        op: SetOp,
        left: ElementId,
        right: ElementId,
        identity: IdentityMode,
    },
}

/// A connected component of the symmetric adjacency relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    /// Members in id (insertion) order.
    pub members: Vec<ElementId>,
}

impl Group {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetCursor {
    pub container: ElementId,
    pub position: u64,
    pub exhausted: bool,
    generation: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Enumerated {
    Item { element: ElementId, next: SetCursor },
    Exhausted,
}

/// An object of a countable set, materialized or not.
#[derive(Clone, Debug, PartialEq)]
pub enum CountableItem {
    Materialized(ElementId),
    Virtual(Vec<(String, Value)>),
}

impl Store {
    pub fn group_of(&self, elem: ElementId) -> StoreResult<Group> {
        self.element(elem)?;
        let mut seen = BTreeSet::from([elem]);
        let mut queue = VecDeque::from([elem]);
        while let Some(x) = queue.pop_front() {
            for n in self.neighbors(x) {
                if self.contains(n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        Ok(Group {
            members: seen.into_iter().collect(),
        })
    }

    /// The member after `elem` in its group's order.
    pub fn next_member(&self, elem: ElementId) -> StoreResult<ElementId> {
        let g = self.group_of(elem)?;
        let pos = g
            .members
            .iter()
            .position(|&m| m == elem)
            .expect("element is in its own group");
        g.members
            .get(pos + 1)
            .copied()
            .ok_or(StoreError::NoNextMember)
    }

    /// All groups; every non-attribute element lies in exactly one.
    pub fn groups(&self) -> Vec<Group> {
        let mut done = HashSet::new();
        let mut out = Vec::new();
        for e in self.nodes() {
            if done.contains(&e.id()) {
                continue;
            }
            let g = self.group_of(e.id()).expect("live element");
            done.extend(g.members.iter().copied());
            out.push(g);
        }
        out
    }

    pub fn mark_set(&mut self, container: ElementId, spec: SetSpecArg) -> StoreResult<()> {
        self.apply(Op::MarkSet { container, spec }).map(drop)
    }

    /// Creates a derived metavertex holding `left` and `right`; its extension
    /// is recomputed from the operands on every enumeration.
    pub fn set_operation(
        &mut self,
        op: SetOp,
        left: ElementId,
        right: ElementId,
        identity: IdentityMode,
    ) -> StoreResult<ElementId> {
        self.apply(Op::SetOperation {
            op,
            left,
            right,
            identity,
        })
        .map(|o| o.id().expect("derived set id"))
    }

    fn check_operand(&self, x: ElementId) -> StoreResult<()> {
        match self.element(x)?.set_spec() {
            Some(SetSpec::Finite) | Some(SetSpec::Derived { .. }) => Ok(()),
            Some(SetSpec::Countable { .. }) => Err(StoreError::CountableOperand(x)),
            _ => Err(StoreError::OperandNotASet(x)),
        }
    }

    pub(crate) fn do_mark_set(
        &mut self,
        container: ElementId,
        spec: &SetSpecArg,
    ) -> StoreResult<()> {
        let e = self.element(container)?.clone();
        if !e.kind().is_container() {
            return Err(StoreError::NotAContainer(container, e.kind()));
        }
        if matches!(
            e.set_spec(),
            Some(SetSpec::Countable { .. }) | Some(SetSpec::Derived { .. })
        ) {
            return Err(StoreError::ManagedContainer(container));
        }
        let new_spec = match spec {
            SetSpecArg::Finite => SetSpec::Finite,
            SetSpecArg::AdjacencyGroup => SetSpec::AdjacencyGroup,
            SetSpecArg::Countable { generator } => {
                let def = self
                    .registry()
                    .generator(generator)
                    .ok_or_else(|| StoreError::UnregisteredGenerator(generator.clone()))?
                    .clone();
                if !e.members().is_empty() {
                    return Err(StoreError::ContainerNotEmpty(container));
                }
                let types = self.insert_element(ElementKind::MetaVertex, None)?;
                self.write_attribute(types, ROLE_ATTR, Value::text("types"), None)?;
                for t in &def.types {
                    let d = self.insert_element(ElementKind::Vertex, None)?;
                    self.write_attribute(d, TYPE_ATTR, Value::text(t.clone()), None)?;
                    self.do_add_member(types, d)?;
                }
                self.element_mut(types)?.set_spec = Some(SetSpec::Finite);
                let objects = self.insert_element(ElementKind::MetaVertex, None)?;
                self.write_attribute(objects, ROLE_ATTR, Value::text("objects"), None)?;
                self.do_add_member(container, types)?;
                self.do_add_member(container, objects)?;
                SetSpec::Countable {
                    types,
                    objects,
                    generator: generator.clone(),
                    cache: BTreeMap::new(),
                }
            }
            SetSpecArg::Derived {
                op,
                left,
                right,
                identity,
            } => {
                self.check_operand(*left)?;
                self.check_operand(*right)?;
                if e.members().iter().any(|m| m != left && m != right) {
                    return Err(StoreError::ContainerNotEmpty(container));
                }
                for m in [*left, *right] {
                    if m == container || self.reaches(m, container) {
                        return Err(StoreError::ContainmentCycle {
                            container,
                            member: m,
                        });
                    }
                }
                self.do_add_member(container, *left)?;
                self.do_add_member(container, *right)?;
                SetSpec::Derived {
                    op: *op,
                    left: *left,
                    right: *right,
                    identity: *identity,
                }
            }
        };
        self.element_mut(container)?.set_spec = Some(new_spec);
        Ok(())
    }

    pub(crate) fn do_set_operation(
        &mut self,
        op: SetOp,
        left: ElementId,
        right: ElementId,
        identity: IdentityMode,
    ) -> StoreResult<ElementId> {
        self.check_operand(left)?;
        self.check_operand(right)?;
        let id = self.insert_element(ElementKind::MetaVertex, None)?;
        self.do_mark_set(
            id,
            &SetSpecArg::Derived {
                op,
                left,
                right,
                identity,
            },
        )?;
        Ok(id)
    }

    /// Restores a countable spec from existing inner metavertices (import).
    pub(crate) fn restore_countable(
        &mut self,
        container: ElementId,
        generator: &str,
    ) -> Result<(), String> {
        let e = self.element(container).map_err(|e| e.to_string())?;
        let role = |s: &Store, id: ElementId| {
            s.attribute(id, ROLE_ATTR)
                .and_then(Value::as_text)
                .map(str::to_string)
        };
        let mut types = None;
        let mut objects = None;
        for &m in e.members() {
            match role(self, m).as_deref() {
                Some("types") => types = Some(m),
                Some("objects") => objects = Some(m),
                _ => return Err("countable set member without agx.role".into()),
            }
        }
        let (Some(types), Some(objects)) = (types, objects) else {
            return Err("countable set needs `types` and `objects` metavertices".into());
        };
        let mut cache = BTreeMap::new();
        for &o in self.element(objects).map_err(|e| e.to_string())?.members() {
            match self.attribute(o, INDEX_ATTR) {
                Some(Value::Int(i)) if *i >= 0 => {
                    cache.insert(*i as u64, o);
                }
                _ => return Err("countable object without agx.index".into()),
            }
        }
        self.element_mut(container)
            .map_err(|e| e.to_string())?
            .set_spec = Some(SetSpec::Countable {
            types,
            objects,
            generator: generator.to_string(),
            cache,
        });
        Ok(())
    }

    pub(crate) fn do_materialize(
        &mut self,
        container: ElementId,
        index: u64,
    ) -> StoreResult<ElementId> {
        let (objects, generator) = match self.element(container)?.set_spec() {
            Some(SetSpec::Countable {
                objects,
                generator,
                cache,
                ..
            }) => {
                if let Some(&id) = cache.get(&index) {
                    return Ok(id);
                }
                (*objects, generator.clone())
            }
            _ => return Err(StoreError::NotASet(container)),
        };
        let attrs = self.generate(&generator, index)?;
        let id = self.insert_element(ElementKind::Vertex, None)?;
        for (name, value) in attrs {
            self.write_attribute(id, &name, value, None)?;
        }
        self.do_add_member(objects, id)?;
        if let Some(SetSpec::Countable { cache, .. }) = &mut self.element_mut(container)?.set_spec {
            cache.insert(index, id);
        }
        Ok(id)
    }

    fn generate(&self, generator: &str, index: u64) -> StoreResult<Vec<(String, Value)>> {
        let def = self
            .registry()
            .generator(generator)
            .ok_or_else(|| StoreError::UnregisteredGenerator(generator.to_string()))?;
        let mut attrs = (def.hook)(index);
        attrs.retain(|(n, _)| n != INDEX_ATTR);
        attrs.push((INDEX_ATTR.to_string(), Value::Int(index as i64)));
        Ok(attrs)
    }

    /// The `index`-th object of a countable set without mutating the store.
    pub fn countable_item(&self, container: ElementId, index: u64) -> StoreResult<CountableItem> {
        match self.element(container)?.set_spec() {
            Some(SetSpec::Countable {
                generator, cache, ..
            }) => match cache.get(&index) {
                Some(&id) => Ok(CountableItem::Materialized(id)),
                None => self.generate(generator, index).map(CountableItem::Virtual),
            },
            _ => Err(StoreError::NotASet(container)),
        }
    }

    pub fn is_countable(&self, container: ElementId) -> bool {
        matches!(
            self.get(container).and_then(|e| e.set_spec()),
            Some(SetSpec::Countable { .. })
        )
    }

    /// Extension of a finite, group or derived set in canonical order.
    pub fn extension(&self, container: ElementId) -> StoreResult<Vec<ElementId>> {
        let mut canon = Canonicalizer::new(self, EqualityMode::ByValue);
        let ids = self.extension_ids(container, &mut canon, 0)?;
        sort_canonical(ids, &mut canon)
    }

    /// Number of elements of a finite set; `None` for countable sets.
    pub fn set_size(&self, container: ElementId) -> StoreResult<Option<usize>> {
        if self.is_countable(container) {
            return Ok(None);
        }
        self.extension(container).map(|e| Some(e.len()))
    }

    fn extension_ids(
        &self,
        container: ElementId,
        canon: &mut Canonicalizer<'_>,
        depth: usize,
    ) -> StoreResult<Vec<ElementId>> {
        if depth > crate::canon::DEFAULT_DEPTH_LIMIT {
            return Err(StoreError::DepthLimitExceeded(
                crate::canon::DEFAULT_DEPTH_LIMIT,
            ));
        }
        let e = self.element(container)?;
        match e.set_spec() {
            None => Err(StoreError::NotASet(container)),
            Some(SetSpec::Finite) => Ok(e
                .members()
                .iter()
                .copied()
                .filter(|m| self.contains(*m))
                .collect()),
            Some(SetSpec::AdjacencyGroup) => {
                let mut all = BTreeSet::new();
                for &m in e.members() {
                    if self.contains(m) {
                        all.extend(self.group_of(m)?.members);
                    }
                }
                Ok(all.into_iter().collect())
            }
            Some(SetSpec::Countable { .. }) => Err(StoreError::CountableOperand(container)),
            Some(SetSpec::Derived {
                op,
                left,
                right,
                identity,
            }) => {
                let (op, left, right, identity) = (*op, *left, *right, *identity);
                let a = self.extension_ids(left, canon, depth + 1)?;
                let b = self.extension_ids(right, canon, depth + 1)?;
                match identity {
                    IdentityMode::ById => Ok(combine_by_id(op, &a, &b)),
                    IdentityMode::ByValueEquality => combine_by_value(op, &a, &b, canon),
                }
            }
        }
    }

    /// Yields the element at the cursor position (the first when `cursor` is
    /// `None`) and the cursor for the next one. Countable sets materialize
    /// objects on demand and are never exhausted.
    pub fn enumerate_set(
        &mut self,
        container: ElementId,
        cursor: Option<&SetCursor>,
    ) -> StoreResult<Enumerated> {
        let spec = self
            .element(container)?
            .set_spec()
            .cloned()
            .ok_or(StoreError::NotASet(container))?;
        let position = match cursor {
            Some(c) if c.container != container => return Err(StoreError::NotASet(container)),
            Some(c) if c.exhausted => return Ok(Enumerated::Exhausted),
            Some(c) => c.position,
            None => 0,
        };
        if let SetSpec::Countable { .. } = spec {
            let element = match self.countable_item(container, position)? {
                CountableItem::Materialized(id) => id,
                CountableItem::Virtual(_) => self
                    .apply(Op::Materialize {
                        container,
                        index: position,
                    })?
                    .id()
                    .expect("materialized id"),
            };
            let next = SetCursor {
                container,
                position: position + 1,
                exhausted: false,
                generation: self.generation(),
            };
            return Ok(Enumerated::Item { element, next });
        }
        if let Some(c) = cursor {
            if c.generation != self.generation() {
                return Err(StoreError::StaleCursor {
                    cursor: c.generation,
                    store: self.generation(),
                });
            }
        }
        let ext = self.extension(container)?;
        match ext.get(position as usize) {
            None => Ok(Enumerated::Exhausted),
            Some(&element) => Ok(Enumerated::Item {
                element,
                next: SetCursor {
                    container,
                    position: position + 1,
                    exhausted: position as usize + 1 >= ext.len(),
                    generation: self.generation(),
                },
            }),
        }
    }
}

fn combine_by_id(op: SetOp, a: &[ElementId], b: &[ElementId]) -> Vec<ElementId> {
    let bs: BTreeSet<ElementId> = b.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let keep = |x: &ElementId| match op {
        SetOp::Union => true,
        SetOp::Intersection => bs.contains(x),
        SetOp::Subtraction => !bs.contains(x),
    };
    for x in a.iter().filter(|x| keep(x)) {
        if seen.insert(*x) {
            out.push(*x);
        }
    }
    if op == SetOp::Union {
        for x in b {
            if seen.insert(*x) {
                out.push(*x);
            }
        }
    }
    out
}

fn combine_by_value(
    op: SetOp,
    a: &[ElementId],
    b: &[ElementId],
    canon: &mut Canonicalizer<'_>,
) -> StoreResult<Vec<ElementId>> {
    let mut b_forms = BTreeSet::new();
    for &x in b {
        b_forms.insert(canon.form(x)?);
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &x in a {
        let f = canon.form(x)?;
        let keep = match op {
            SetOp::Union => true,
            SetOp::Intersection => b_forms.contains(&f),
            SetOp::Subtraction => !b_forms.contains(&f),
        };
        if keep && seen.insert(f) {
            out.push(x);
        }
    }
    if op == SetOp::Union {
        for &x in b {
            if seen.insert(canon.form(x)?) {
                out.push(x);
            }
        }
    }
    Ok(out)
}

fn sort_canonical(
    ids: Vec<ElementId>,
    canon: &mut Canonicalizer<'_>,
) -> StoreResult<Vec<ElementId>> {
    let mut keyed = Vec::with_capacity(ids.len());
    for id in ids {
        keyed.push((canon.form(id)?, id));
    }
    keyed.sort();
    Ok(keyed.into_iter().map(|(_, id)| id).collect())
}
