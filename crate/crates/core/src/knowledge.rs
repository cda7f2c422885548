//! Typed knowledge fragments, their formalization groups, and derivation
//! links recording which fragment was obtained from which.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::element::ElementKind;
use crate::error::{StoreError, StoreResult};
use crate::id::{is_valid_name, ElementId};
use crate::store::{Op, Store};
use crate::value::Value;

pub const KIND_ATTR: &str = "agx.kind";
pub const GROUP_ATTR: &str = "agx.group";
pub const DERIVATION_ATTR: &str = "agx.derivation";
/// Fragment meta entries live on the owner as `agx.meta.<name>` attributes.
pub const META_PREFIX: &str = "agx.meta.";

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FormalizationGroup {
    Unformalized,
    PartiallyFormalized,
    Formalized,
}

impl FormalizationGroup {
    pub fn name(self) -> &'static str {
        match self {
            FormalizationGroup::Unformalized => "unformalized",
            FormalizationGroup::PartiallyFormalized => "partially-formalized",
            FormalizationGroup::Formalized => "formalized",
        }
    }
}

impl fmt::Display for FormalizationGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

use FormalizationGroup::{Formalized, PartiallyFormalized, Unformalized};

pub const BUNDLED_KINDS: [(&str, FormalizationGroup); 35] = [
    ("text", Unformalized),
    ("graph-scheme", Unformalized),
    ("map", Unformalized),
    ("speech-audio", Unformalized),
    ("music", Unformalized),
    ("image", Unformalized),
    ("video", Unformalized),
    ("structured-data", PartiallyFormalized),
    ("database-extract", PartiallyFormalized),
    ("search-index", PartiallyFormalized),
    ("blockchain-record", PartiallyFormalized),
    ("cad-model", PartiallyFormalized),
    ("neural-net-structure", PartiallyFormalized),
    ("gis-data", PartiallyFormalized),
    ("table", PartiallyFormalized),
    ("math-model", PartiallyFormalized),
    ("program", Formalized),
    ("logic-program", Formalized),
    ("action-diagram", Formalized),
    ("semantic-network", Formalized),
    ("trained-neural-net", Formalized),
    ("frame", Formalized),
    ("knowledge-graph", Formalized),
    ("predicate-logic-text", Formalized),
    ("rdf-owl", Formalized),
    ("ontology", Formalized),
    ("production-rules", Formalized),
    ("formal-grammar", Formalized),
    ("concept-system", Formalized),
    ("conceptual-model", Formalized),
    ("ear-space", Formalized),
    ("complex-network", Formalized),
    ("petri-net", Formalized),
    ("finite-state-machine", Formalized),
    ("simulation-model", Formalized),
];

/// Group of a bundled kind; extensions are looked up through the store.
pub fn bundled_group(kind: &str) -> Option<FormalizationGroup> {
    BUNDLED_KINDS
        .iter()
        .find(|(k, _)| *k == kind)
        .map(|(_, g)| *g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeFragment {
    pub kind: String,
    pub group: FormalizationGroup,
    pub media_type: String,
    pub payload: Vec<u8>,
    pub meta: Vec<(String, Value)>,
}

impl KnowledgeFragment {
    /// A fragment whose group is taken from the bundled vocabulary
    /// (unformalized for kinds outside it; use [`Self::with_group`] then).
    pub fn new(kind: &str, media_type: &str, payload: impl Into<Vec<u8>>) -> Self {
        KnowledgeFragment {
            kind: kind.to_string(),
            group: bundled_group(kind).unwrap_or(Unformalized),
            media_type: media_type.to_string(),
            payload: payload.into(),
            meta: Vec::new(),
        }
    }

    pub fn with_group(mut self, group: FormalizationGroup) -> Self {
        self.group = group;
        self
    }

    pub fn with_meta(mut self, name: &str, value: Value) -> Self {
        self.meta.push((name.to_string(), value));
        self
    }

    pub fn meta(&self, name: &str) -> Option<&Value> {
        self.meta.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }
}

/// The part of a fragment held on the carrier element itself.
#[derive(Clone, Debug, PartialEq)]
pub struct FragmentBody {
    pub kind: String,
    pub media_type: String,
    pub payload: Vec<u8>,
}

/// One derivation link, oriented from the derived fragment to its source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub link: ElementId,
    pub src: ElementId,
    pub dst: ElementId,
    pub relation: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    /// Derivation links in depth-first order.
    pub links: Vec<Derivation>,
    /// Links that close a cycle back onto the current path.
    pub cycles: Vec<Derivation>,
}

/// Bundled stub: one graph node per nonblank line of a UTF-8 text payload.
pub fn split_lines_to_graph(frag: &KnowledgeFragment) -> Result<KnowledgeFragment, String> {
    let text =
        std::str::from_utf8(&frag.payload).map_err(|e| format!("payload is not UTF-8: {e}"))?;
    let nodes: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let mut out = String::new();
    for (i, n) in nodes.iter().enumerate() {
        out.push_str(&format!("node {i} {n}\n"));
        if i > 0 {
            out.push_str(&format!("edge {} {i}\n", i - 1));
        }
    }
    Ok(
        KnowledgeFragment::new("knowledge-graph", "text/x-agx-graph", out)
            .with_meta("nodes", Value::Int(nodes.len() as i64)),
    )
}

impl Store {
    pub fn formalization_group(&self, kind: &str) -> StoreResult<FormalizationGroup> {
        bundled_group(kind)
            .or_else(|| self.registry().extension_kind(kind))
            .ok_or_else(|| StoreError::UnknownKind(kind.to_string()))
    }

    pub fn attach_fragment(
        &mut self,
        owner: ElementId,
        fragment: KnowledgeFragment,
    ) -> StoreResult<()> {
        self.apply(Op::AttachFragment { owner, fragment }).map(drop)
    }

    fn check_fragment(
        &self,
        owner: Option<ElementId>,
        frag: &KnowledgeFragment,
    ) -> StoreResult<()> {
        if let Some(owner) = owner {
            let k = self.kind(owner)?;
            if !matches!(k, ElementKind::Vertex | ElementKind::MetaVertex) {
                return Err(StoreError::NotAFragmentCarrier(owner, k));
            }
        }
        let expected = self.formalization_group(&frag.kind)?;
        if expected != frag.group {
            return Err(StoreError::GroupMismatch {
                kind: frag.kind.clone(),
                expected: expected.name().to_string(),
                declared: frag.group.name().to_string(),
            });
        }
        if frag.media_type.is_empty() || frag.media_type.chars().any(char::is_whitespace) {
            return Err(StoreError::InvalidName(frag.media_type.clone()));
        }
        for (name, value) in &frag.meta {
            let full = format!("{META_PREFIX}{name}");
            if !is_valid_name(&full) {
                return Err(StoreError::InvalidName(full));
            }
            self.check_value(value)?;
        }
        Ok(())
    }

    pub(crate) fn do_attach_fragment(
        &mut self,
        owner: ElementId,
        frag: &KnowledgeFragment,
    ) -> StoreResult<()> {
        self.check_fragment(Some(owner), frag)?;
        let stale: Vec<ElementId> = self
            .attributes(owner)
            .into_iter()
            .filter(|(n, _)| n.starts_with(META_PREFIX))
            .filter_map(|(n, _)| self.attribute_id(owner, n))
            .collect();
        for a in stale {
            self.remove_attribute(a);
        }
        self.set_fragment_body(
            owner,
            FragmentBody {
                kind: frag.kind.clone(),
                media_type: frag.media_type.clone(),
                payload: frag.payload.clone(),
            },
        )?;
        self.write_attribute(owner, KIND_ATTR, Value::text(frag.kind.clone()), None)?;
        self.write_attribute(owner, GROUP_ATTR, Value::text(frag.group.name()), None)?;
        for (name, value) in &frag.meta {
            self.write_attribute(owner, &format!("{META_PREFIX}{name}"), value.clone(), None)?;
        }
        Ok(())
    }

    pub(crate) fn set_fragment_body(
        &mut self,
        owner: ElementId,
        body: FragmentBody,
    ) -> StoreResult<()> {
        self.element_mut(owner)?.fragment = Some(body);
        Ok(())
    }

    pub fn has_fragment(&self, id: ElementId) -> bool {
        self.get(id).is_some_and(|e| e.fragment.is_some())
    }

    /// The fragment carried by `owner`, reassembled with its group and meta.
    pub fn fragment(&self, owner: ElementId) -> StoreResult<KnowledgeFragment> {
        let body = self
            .element(owner)?
            .fragment
            .as_ref()
            .ok_or(StoreError::NoFragment(owner))?;
        let group = self.formalization_group(&body.kind)?;
        let meta = self
            .attributes(owner)
            .into_iter()
            .filter_map(|(n, v)| {
                n.strip_prefix(META_PREFIX)
                    .map(|m| (m.to_string(), v.clone()))
            })
            .collect();
        Ok(KnowledgeFragment {
            kind: body.kind.clone(),
            group,
            media_type: body.media_type.clone(),
            payload: body.payload.clone(),
            meta,
        })
    }

    /// Links `src` (the derived fragment) to `dst` (its source). A nonempty
    /// `detail` makes the link a metaedge containing those elements.
    pub fn add_derivation(
        &mut self,
        src: ElementId,
        dst: ElementId,
        relation: &str,
        detail: &[ElementId],
    ) -> StoreResult<ElementId> {
        self.apply(Op::AddDerivation {
            src,
            dst,
            relation: relation.to_string(),
            detail: detail.to_vec(),
        })
        .map(|o| o.id().expect("derivation link id"))
    }

    pub(crate) fn do_add_derivation(
        &mut self,
        src: ElementId,
        dst: ElementId,
        relation: &str,
        detail: &[ElementId],
    ) -> StoreResult<ElementId> {
        for x in [src, dst] {
            if !self.element(x)?.fragment.is_some() {
                return Err(StoreError::NoFragment(x));
            }
        }
        if !is_valid_name(relation) {
            return Err(StoreError::InvalidName(relation.to_string()));
        }
        for &d in detail {
            if self.kind(d)? == ElementKind::Attribute {
                return Err(StoreError::AttributeNotAllowed(d));
            }
        }
        let kind = if detail.is_empty() {
            ElementKind::Edge
        } else {
            ElementKind::MetaEdge
        };
        let link = self.do_create_link(kind, &[src], &[dst], true, None)?;
        for &d in detail {
            self.do_add_member(link, d)?;
        }
        self.write_attribute(link, DERIVATION_ATTR, Value::text(relation), None)?;
        Ok(link)
    }

    /// Derivation links whose derived side is `id`.
    pub fn derivations_from(&self, id: ElementId) -> Vec<Derivation> {
        self.all_derivations()
            .into_iter()
            .filter(|d| d.src == id)
            .collect()
    }

    pub fn all_derivations(&self) -> Vec<Derivation> {
        self.nodes()
            .filter_map(|e| {
                let relation = self
                    .attribute(e.id(), DERIVATION_ATTR)?
                    .as_text()?
                    .to_string();
                let ends = e.endpoints()?;
                match (ends.from.as_slice(), ends.to.as_slice()) {
                    ([src], [dst]) => Some(Derivation {
                        link: e.id(),
                        src: *src,
                        dst: *dst,
                        relation,
                    }),
                    _ => None,
                }
            })
            .collect()
    }

    /// Everything `id` was derived from, transitively. Terminates on cyclic
    /// derivation graphs and reports the links that close cycles.
    pub fn provenance(&self, id: ElementId) -> StoreResult<Provenance> {
        self.element(id)?;
        let all = self.all_derivations();
        let mut report = Provenance::default();
        let mut visited = BTreeSet::new();
        let mut path = Vec::new();
        self.provenance_dfs(id, &all, &mut visited, &mut path, &mut report);
        Ok(report)
    }

    fn provenance_dfs(
        &self,
        at: ElementId,
        all: &[Derivation],
        visited: &mut BTreeSet<ElementId>,
        path: &mut Vec<ElementId>,
        report: &mut Provenance,
    ) {
        visited.insert(at);
        path.push(at);
        for d in all.iter().filter(|d| d.src == at) {
            if path.contains(&d.dst) {
                report.cycles.push(d.clone());
                continue;
            }
            report.links.push(d.clone());
            if !visited.contains(&d.dst) {
                self.provenance_dfs(d.dst, all, visited, path, report);
            }
        }
        path.pop();
    }

    /// Runs the registered converter on `owner`'s fragment, creating a new
    /// vertex with the result and a "generated-from" link back to `owner`.
    /// Either both are created or neither.
    pub fn convert(
        &mut self,
        owner: ElementId,
        to_kind: &str,
    ) -> StoreResult<(ElementId, ElementId)> {
        let frag = self.fragment(owner)?;
        let hook = self
            .registry()
            .converter(&frag.kind, to_kind)
            .cloned()
            .ok_or_else(|| StoreError::NoConverter {
                from: frag.kind.clone(),
                to: to_kind.to_string(),
            })?;
        let failed = |message: String| StoreError::ConversionFailed {
            from: frag.kind.clone(),
            to: to_kind.to_string(),
            message,
        };
        let converted = hook(&frag).map_err(failed)?;
        if converted.kind != to_kind {
            return Err(failed(format!(
                "converter produced kind `{}`",
                converted.kind
            )));
        }
        self.check_fragment(None, &converted)
            .map_err(|e| failed(e.to_string()))?;
        let new = self.create_element(ElementKind::Vertex, None)?;
        self.attach_fragment(new, converted)?;
        let link = self.add_derivation(new, owner, "generated-from", &[])?;
        Ok((new, link))
    }
}
