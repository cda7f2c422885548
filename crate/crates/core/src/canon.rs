//! Canonical forms, element equality, and the deterministic element order
//! used by export.
//!
//! A canonical form renders an element with ids erased: its kind, attribute
//! names (and values in by-value mode), set and fragment descriptors, and the
//! recursively canonicalized members and endpoints as sorted multisets.
//! An element met again while it is still being rendered (a link inside
//! its own endpoint's container, say) renders as `^k`, the number of steps
//! back along the current path.
//! Structural equality compares forms without attribute values; by-value
//! equality keeps them.

use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::element::{Element, ElementKind};
use crate::error::{StoreError, StoreResult};
use crate::id::ElementId;
use crate::sets::SetSpec;
use crate::store::Store;
use crate::value::{encode_base64, Value};

pub const DEFAULT_DEPTH_LIMIT: usize = 64;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EqualityMode {
    Structural,
    ByValue,
}

/// Memoizing renderer of canonical forms over one store.
pub struct Canonicalizer<'s> {
    store: &'s Store,
    mode: EqualityMode,
    limit: usize,
    memo: HashMap<ElementId, (Rc<str>, usize)>,
    path: Vec<ElementId>,
}

/// A rendered form, its height, and the shallowest path position any
/// back-reference inside it points to (`usize::MAX` when there is none).
type Rendered = (Rc<str>, usize, usize);

impl<'s> Canonicalizer<'s> {
    pub fn new(store: &'s Store, mode: EqualityMode) -> Self {
        Canonicalizer {
            store,
            mode,
            limit: DEFAULT_DEPTH_LIMIT,
            memo: HashMap::new(),
            path: Vec::new(),
        }
    }

    pub fn with_depth_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn form(&mut self, id: ElementId) -> StoreResult<Rc<str>> {
        self.path.clear();
        self.render(id).map(|(f, _, _)| f)
    }

    fn render(&mut self, id: ElementId) -> StoreResult<Rendered> {
        if let Some((f, h)) = self.memo.get(&id) {
            return Ok((f.clone(), *h, usize::MAX));
        }
        let store = self.store;
        let e = store.element(id)?;
        if self.path.len() >= self.limit {
            return Err(StoreError::DepthLimitExceeded(self.limit));
        }
        let at = self.path.len();
        self.path.push(id);
        let r = self.render_at(e);
        self.path.pop();
        let (f, height, low) = r?;
        // An element on a cycle renders differently along different paths.
        if low > at {
            self.memo.insert(id, (f.clone(), height));
        }
        Ok((f, height, low))
    }

    fn render_at(&mut self, e: &Element) -> StoreResult<Rendered> {
        let mut height = 1;
        let mut low = usize::MAX;
        let mut out = String::from(e.kind.name());
        self.push_attributes(e, &mut out);
        self.push_set_and_fragment(e, &mut out);

        if !e.members.is_empty() {
            let mut forms = Vec::with_capacity(e.members.len());
            for &m in &e.members {
                let (f, h, l) = self.child(m)?;
                height = height.max(h + 1);
                low = low.min(l);
                forms.push(f);
            }
            forms.sort();
            out.push('<');
            out.push_str(&forms.join(","));
            out.push('>');
        }
        if let Some(ends) = &e.endpoints {
            let mut sides = Vec::with_capacity(2);
            for side in [&ends.from, &ends.to] {
                let mut forms = Vec::with_capacity(side.len());
                for &x in side {
                    let (f, h, l) = self.child(x)?;
                    height = height.max(h + 1);
                    low = low.min(l);
                    forms.push(f);
                }
                forms.sort();
                sides.push(forms.join(","));
            }
            if !ends.directed {
                sides.sort();
            }
            out.push_str(&format!(
                "({}|{}|{})",
                sides[0],
                sides[1],
                if ends.directed { "d" } else { "u" }
            ));
        }
        if height > self.limit {
            return Err(StoreError::DepthLimitExceeded(self.limit));
        }
        Ok((Rc::from(out), height, low))
    }

    fn child(&mut self, id: ElementId) -> StoreResult<Rendered> {
        if let Some(pos) = self.path.iter().rposition(|&p| p == id) {
            let back = self.path.len() - 1 - pos;
            return Ok((Rc::from(format!("^{back}")), 0, pos));
        }
        if self.store.contains(id) {
            self.render(id)
        } else {
            // dangling reference; validation reports it
            Ok((Rc::from("?"), 0, usize::MAX))
        }
    }

    fn push_attributes(&self, e: &Element, out: &mut String) {
        if e.attributes.is_empty() {
            return;
        }
        let mut parts: Vec<String> = self
            .store
            .attributes(e.id)
            .into_iter()
            .map(|(name, value)| match self.mode {
                EqualityMode::Structural => name.to_string(),
                EqualityMode::ByValue => format!("{name}={}", self.render_value(value)),
            })
            .collect();
        parts.sort();
        out.push('[');
        out.push_str(&parts.join(","));
        out.push(']');
    }

    fn push_set_and_fragment(&self, e: &Element, out: &mut String) {
        let by_value = self.mode == EqualityMode::ByValue;
        if let Some(spec) = &e.set_spec {
            let s = match spec {
                SetSpec::Finite => "finite".to_string(),
                SetSpec::AdjacencyGroup => "group".to_string(),
                SetSpec::Countable { generator, .. } if by_value => {
                    format!("countable:{generator}")
                }
                SetSpec::Countable { .. } => "countable".to_string(),
                SetSpec::Derived { op, identity, .. } if by_value => {
                    format!("derived:{}:{}", op.name(), identity.name())
                }
                SetSpec::Derived { .. } => "derived".to_string(),
            };
            out.push_str(&format!("{{set:{s}}}"));
        }
        if let Some(frag) = &e.fragment {
            if by_value {
                out.push_str(&format!(
                    "{{frag:{}:{}:{}}}",
                    frag.kind,
                    frag.media_type,
                    encode_base64(&frag.payload)
                ));
            } else {
                out.push_str(&format!("{{frag:{}}}", frag.kind));
            }
        }
    }

    fn render_value(&self, v: &Value) -> String {
        match v {
            // references compare by the kind of their target, never by id
            Value::Ref(target) => match self.store.get(*target) {
                Some(t) => format!("ref:{}", t.kind.name()),
                None => "ref:?".to_string(),
            },
            other => format!("{}:{}", other.tag(), other.literal()),
        }
    }
}

/// Form of a generated object that has not been materialized; matches the
/// form the materialized vertex would have.
pub(crate) fn vertex_form(attrs: &[(String, Value)], mode: EqualityMode) -> String {
    let mut out = String::from(ElementKind::Vertex.name());
    if !attrs.is_empty() {
        let mut parts: Vec<String> = attrs
            .iter()
            .map(|(n, v)| match mode {
                EqualityMode::Structural => n.clone(),
                EqualityMode::ByValue => format!("{n}={}:{}", v.tag(), v.literal()),
            })
            .collect();
        parts.sort();
        out.push('[');
        out.push_str(&parts.join(","));
        out.push(']');
    }
    out
}

impl Store {
    pub fn canonical_form(&self, id: ElementId, mode: EqualityMode) -> StoreResult<String> {
        Canonicalizer::new(self, mode)
            .form(id)
            .map(|f| f.to_string())
    }

    /// Object equality in the two flavours: structural (attribute names only)
    /// and by value (attribute values must match as well).
    pub fn equals(&self, a: ElementId, b: ElementId, mode: EqualityMode) -> StoreResult<bool> {
        let mut c = Canonicalizer::new(self, mode);
        let fa = c.form(a)?;
        let fb = c.form(b)?;
        Ok(fa == fb)
    }

    /// Deterministic order of all live non-attribute elements that depends on
    /// store content rather than construction order. Starts from each
    /// element's token and by-value form, then refines by the classes of the
    /// elements around it (containers, links, adjacency, references) until
    /// the partition is stable; remaining ties fall back to id order.
    pub fn canonical_order(&self) -> StoreResult<Vec<ElementId>> {
        let ids: Vec<ElementId> = self.nodes().map(|e| e.id).collect();
        let index: HashMap<ElementId, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

        let mut canon = Canonicalizer::new(self, EqualityMode::ByValue);
        let mut base = Vec::with_capacity(ids.len());
        for &id in &ids {
            let tok = self.token_of(id).unwrap_or("").to_string();
            base.push((tok, canon.form(id)?));
        }
        let mut class = dense_rank(&base);

        // (role, neighbour index, qualifier)
        let mut context: Vec<Vec<(u8, usize, String)>> = vec![Vec::new(); ids.len()];
        let mut link = |from: ElementId, role: u8, to: ElementId, q: String| {
            if let (Some(&i), Some(&j)) = (index.get(&from), index.get(&to)) {
                context[i].push((role, j, q));
            }
        };
        for e in self.nodes() {
            for &m in &e.members {
                link(m, 0, e.id, String::new());
                link(e.id, 1, m, String::new());
            }
            if let Some(ends) = &e.endpoints {
                for (pos, &x) in ends.from.iter().enumerate() {
                    link(x, 2, e.id, pos.to_string());
                }
                for (pos, &x) in ends.to.iter().enumerate() {
                    link(x, 3, e.id, pos.to_string());
                }
            }
            for (name, value) in self.attributes(e.id) {
                if let Value::Ref(t) = value {
                    link(e.id, 4, *t, name.to_string());
                    link(*t, 5, e.id, name.to_string());
                }
            }
            if let Some(SetSpec::Derived { left, right, .. }) = &e.set_spec {
                link(e.id, 6, *left, String::new());
                link(e.id, 7, *right, String::new());
            }
        }
        for &(a, b) in &self.adjacency {
            link(a, 8, b, String::new());
            link(b, 9, a, String::new());
        }

        let mut classes = count_classes(&class);
        for _ in 0..ids.len() {
            let sigs: Vec<(usize, Vec<(u8, usize, String)>)> = (0..ids.len())
                .map(|i| {
                    let mut ctx: Vec<(u8, usize, String)> = context[i]
                        .iter()
                        .map(|(r, j, q)| (*r, class[*j], q.clone()))
                        .collect();
                    ctx.sort();
                    (class[i], ctx)
                })
                .collect();
            let next = dense_rank(&sigs);
            let n = count_classes(&next);
            class = next;
            if n == classes {
                break;
            }
            classes = n;
        }

        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by_key(|&i| (class[i], ids[i]));
        Ok(order.into_iter().map(|i| ids[i]).collect())
    }

    /// Element-wise by-value equivalence of two stores: the multisets of
    /// by-value forms (with tokens) coincide.
    pub fn by_value_equivalent(&self, other: &Store) -> StoreResult<bool> {
        fn forms(s: &Store) -> StoreResult<Vec<String>> {
            let mut c = Canonicalizer::new(s, EqualityMode::ByValue);
            let mut v = Vec::new();
            for e in s.nodes() {
                v.push(format!("{}:{}", e.token().unwrap_or(""), c.form(e.id)?));
            }
            v.sort();
            Ok(v)
        }
        Ok(forms(self)? == forms(other)?)
    }
}

fn dense_rank<T: Ord>(keys: &[T]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[a].cmp(&keys[b]));
    let mut rank = vec![0; keys.len()];
    let mut r = 0;
    for (pos, &i) in idx.iter().enumerate() {
        if pos > 0 && keys[idx[pos - 1]] != keys[i] {
            r += 1;
        }
        rank[i] = r;
    }
    rank
}

fn count_classes(class: &[usize]) -> usize {
    class.iter().max().map_or(0, |m| m + 1)
}
