use std::collections::HashMap;
use std::fmt::Write as _;

use super::{PersistError, PersistResult};
use crate::element::{ElementKind, Endpoints};
use crate::id::{is_valid_name, is_valid_token, parse_anonymous_label, ElementId};
use crate::knowledge::FragmentBody;
use crate::logic::{MapIds, PredicateDef};
use crate::ql::{self, print_formula, print_rule};
use crate::sets::{IdentityMode, SetOp, SetSpec};
use crate::store::Store;
use crate::value::{decode_base64, encode_base64, unquote_prefix, Timestamp, Value};

pub const HEADER: &str = "#agx 1";

const RECORDS: [&str; 9] = [
    "elem", "ends", "attr", "member", "adj", "set", "frag", "rule", "pred",
];

/// Original ids in record order, kept by snapshots so a log suffix can be
/// replayed on top of a loaded document.
#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct IdTable {
    pub elems: Vec<ElementId>,
    pub attrs: Vec<ElementId>,
}

/// Canonical text of `store`. Unbound elements are labelled by their
/// position in the canonical order, so the output depends only on content.
pub fn export_text(store: &Store) -> PersistResult<String> {
    export_with_ids(store).map(|(text, _)| text)
}

pub(crate) fn export_with_ids(store: &Store) -> PersistResult<(String, IdTable)> {
    let report = store.validate(store.profile());
    if !report.is_conforming() {
        let msgs: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(PersistError::ValidationFailed(msgs.join("; ")));
    }
    let order = store.canonical_order()?;
    let pos: HashMap<ElementId, usize> = order.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let missing = |id: ElementId| {
        PersistError::ValidationFailed(format!("reference to missing element {id}"))
    };
    let label = |id: ElementId| -> PersistResult<String> {
        match store.token_of(id) {
            Some(t) => Ok(t.to_string()),
            None => pos
                .get(&id)
                .map(|p| format!("{:032x}", p + 1))
                .ok_or_else(|| missing(id)),
        }
    };
    let labels = |ids: &[ElementId]| -> PersistResult<String> {
        Ok(ids
            .iter()
            .map(|&i| label(i))
            .collect::<PersistResult<Vec<_>>>()?
            .join(","))
    };
    let mut ordinal = |id: ElementId| {
        pos.get(&id)
            .map(|p| ElementId(*p as u128 + 1))
            .ok_or_else(|| missing(id))
    };

    let mut out = format!("{HEADER}\n");
    let mut table = IdTable::default();
    for &id in &order {
        let _ = writeln!(out, "elem {} {}", label(id)?, store.kind(id)?.name());
        table.elems.push(id);
    }
    for &id in &order {
        if let Some(ends) = store.element(id)?.endpoints() {
            let _ = writeln!(
                out,
                "ends {} from={} to={} directed={}",
                label(id)?,
                labels(&ends.from)?,
                labels(&ends.to)?,
                u8::from(ends.directed)
            );
        }
    }
    for &id in &order {
        let mut attrs: Vec<(&str, ElementId, &Value)> = store
            .element(id)?
            .attribute_ids()
            .iter()
            .filter_map(|&a| {
                store
                    .get(a)?
                    .attribute_data()
                    .map(|d| (d.name.as_str(), a, &d.value))
            })
            .collect();
        attrs.sort_by(|a, b| a.0.cmp(b.0));
        for (name, aid, value) in attrs {
            let lit = match value {
                Value::Ref(t) => label(*t)?,
                other => other.literal(),
            };
            let _ = writeln!(out, "attr {} {name} {}:{lit}", label(id)?, value.tag());
            table.attrs.push(aid);
        }
    }
    for &id in &order {
        let mut ms: Vec<usize> = store
            .element(id)?
            .members()
            .iter()
            .map(|m| pos.get(m).copied().ok_or_else(|| missing(*m)))
            .collect::<PersistResult<_>>()?;
        ms.sort_unstable();
        for m in ms {
            let _ = writeln!(out, "member {} {}", label(id)?, label(order[m])?);
        }
    }
    let mut pairs: Vec<(usize, usize)> = store
        .adjacency_pairs()
        .iter()
        .map(|(a, b)| {
            Ok((
                *pos.get(a).ok_or_else(|| missing(*a))?,
                *pos.get(b).ok_or_else(|| missing(*b))?,
            ))
        })
        .collect::<PersistResult<_>>()?;
    pairs.sort_unstable();
    for (a, b) in pairs {
        let _ = writeln!(out, "adj {} {}", label(order[a])?, label(order[b])?);
    }
    for &id in &order {
        let spec = match store.element(id)?.set_spec() {
            None => continue,
            Some(SetSpec::Finite) => "finite".to_string(),
            Some(SetSpec::AdjacencyGroup) => "group".to_string(),
            Some(SetSpec::Countable { generator, .. }) => format!("countable gen={generator}"),
            Some(SetSpec::Derived {
                op,
                left,
                right,
                identity,
            }) => {
                format!(
                    "derived op={} {} {} {}",
                    op.name(),
                    label(*left)?,
                    label(*right)?,
                    identity.name()
                )
            }
        };
        let _ = writeln!(out, "set {} {spec}", label(id)?);
    }
    for &id in &order {
        if let Some(body) = store.element(id)?.fragment_body() {
            let _ = writeln!(
                out,
                "frag {} kind={} media={} data={}",
                label(id)?,
                body.kind,
                body.media_type,
                encode_base64(&body.payload)
            );
        }
    }
    for r in store.rules() {
        let mut r = r.clone();
        r.map_ids(&mut ordinal)?;
        let _ = writeln!(out, "rule {}", print_rule(&r));
    }
    for (name, def) in store.predicates() {
        let mut body = def.body.clone();
        body.map_ids(&mut ordinal)?;
        let _ = writeln!(
            out,
            "pred {name}/{} ({}) {}",
            def.params.len(),
            def.params.join(", "),
            print_formula(&body)
        );
    }
    Ok((out, table))
}

/// Reads a document into a fresh store with the bundled registry.
pub fn import_text(text: &str) -> PersistResult<Store> {
    import_text_into(text, Store::new())
}

/// Reads a document into `base`, which must be empty; its registry and
/// profile apply.
pub fn import_text_into(text: &str, base: Store) -> PersistResult<Store> {
    import_with_ids(text, base, None)
}

struct Field<'a> {
    col: usize,
    text: &'a str,
}

/// Splits off at most `n` space-separated fields; the last keeps any spaces.
fn fields(line: &str, n: usize) -> Vec<Field<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    for part in line.splitn(n, ' ') {
        out.push(Field {
            col: line[..start].chars().count() + 1,
            text: part,
        });
        start += part.len() + 1;
    }
    out
}

struct Importer<'a> {
    store: Store,
    ids: Option<&'a IdTable>,
    labels: HashMap<String, ElementId>,
    ordinals: Vec<ElementId>,
    attr_count: usize,
    line: usize,
}

impl Importer<'_> {
    fn parse_err(&self, col: usize, message: impl Into<String>) -> PersistError {
        PersistError::Parse {
            line: self.line,
            col,
            message: message.into(),
        }
    }

    fn store_err(&self, source: crate::error::StoreError) -> PersistError {
        PersistError::Store {
            line: self.line,
            source,
        }
    }

    fn resolve(&self, col: usize, label: &str) -> PersistResult<ElementId> {
        self.labels
            .get(label)
            .copied()
            .ok_or_else(|| PersistError::DanglingReference {
                line: self.line,
                col,
                label: label.to_string(),
            })
    }

    fn resolve_list(&self, f: &Field, prefix: &str) -> PersistResult<Vec<ElementId>> {
        let Some(list) = f.text.strip_prefix(prefix) else {
            return Err(self.parse_err(f.col, format!("expected `{prefix}`")));
        };
        let mut col = f.col + prefix.len();
        let mut out = Vec::new();
        for l in list.split(',') {
            if l.is_empty() {
                return Err(self.parse_err(col, "expected element label"));
            }
            out.push(self.resolve(col, l)?);
            col += l.len() + 1;
        }
        Ok(out)
    }

    fn expect_fields<'l>(&self, line: &'l str, n: usize) -> PersistResult<Vec<Field<'l>>> {
        let fs = fields(line, n);
        if fs.len() < n {
            return Err(self.parse_err(
                line.chars().count() + 1,
                format!("expected {} fields", n - 1),
            ));
        }
        Ok(fs)
    }

    fn record(&mut self, kind: &str, line: &str) -> PersistResult<()> {
        match kind {
            "elem" => {
                let f = self.expect_fields(line, 3)?;
                let l = f[1].text;
                let token = if is_valid_token(l) {
                    Some(l.to_string())
                } else if parse_anonymous_label(l).is_some() {
                    None
                } else {
                    return Err(self.parse_err(
                        f[1].col,
                        format!("`{l}` is neither a token nor a hex label"),
                    ));
                };
                if self.labels.contains_key(l) {
                    return Err(self.parse_err(f[1].col, format!("label `{l}` declared twice")));
                }
                let kind: ElementKind = f[2]
                    .text
                    .parse()
                    .ok()
                    .filter(|k| *k != ElementKind::Attribute)
                    .ok_or_else(|| {
                        self.parse_err(f[2].col, format!("unknown element kind `{}`", f[2].text))
                    })?;
                let id = match self.ids {
                    Some(t) => {
                        let id = *t
                            .elems
                            .get(self.ordinals.len())
                            .ok_or(PersistError::TruncatedSnapshot)?;
                        if let Some(tok) = &token {
                            self.store.check_token(tok).map_err(|e| self.store_err(e))?;
                        }
                        self.store.insert_with_id(id, kind, token);
                        id
                    }
                    None => self
                        .store
                        .insert_element(kind, token)
                        .map_err(|e| self.store_err(e))?,
                };
                self.labels.insert(l.to_string(), id);
                self.ordinals.push(id);
            }
            "ends" => {
                let f = self.expect_fields(line, 5)?;
                let link = self.resolve(f[1].col, f[1].text)?;
                let from = self.resolve_list(&f[2], "from=")?;
                let to = self.resolve_list(&f[3], "to=")?;
                let directed = match f[4].text {
                    "directed=1" => true,
                    "directed=0" => false,
                    _ => {
                        return Err(
                            self.parse_err(f[4].col, "expected `directed=0` or `directed=1`")
                        )
                    }
                };
                let kind = self.store.kind(link).map_err(|e| self.store_err(e))?;
                if !kind.is_link() {
                    return Err(self
                        .parse_err(f[1].col, format!("`{}` is a {kind}, not a link", f[1].text)));
                }
                self.store
                    .check_endpoints(&from, &to)
                    .map_err(|e| self.store_err(e))?;
                self.store
                    .set_endpoints_unchecked(link, Endpoints { from, to, directed })
                    .map_err(|e| self.store_err(e))?;
            }
            "attr" => {
                let f = self.expect_fields(line, 4)?;
                let owner = self.resolve(f[1].col, f[1].text)?;
                if !is_valid_name(f[2].text) {
                    return Err(self.parse_err(
                        f[2].col,
                        format!("`{}` is not a valid attribute name", f[2].text),
                    ));
                }
                let value = self.value(&f[3])?;
                self.store
                    .check_value(&value)
                    .map_err(|e| self.store_err(e))?;
                if self.store.attribute(owner, f[2].text).is_some() {
                    return Err(
                        self.parse_err(f[2].col, format!("attribute `{}` set twice", f[2].text))
                    );
                }
                let pinned = match self.ids {
                    Some(t) => Some(
                        *t.attrs
                            .get(self.attr_count)
                            .ok_or(PersistError::TruncatedSnapshot)?,
                    ),
                    None => None,
                };
                self.store
                    .write_attribute(owner, f[2].text, value, pinned)
                    .map_err(|e| self.store_err(e))?;
                self.attr_count += 1;
            }
            "member" => {
                let f = self.expect_fields(line, 3)?;
                let c = self.resolve(f[1].col, f[1].text)?;
                let m = self.resolve(f[2].col, f[2].text)?;
                self.store
                    .do_add_member(c, m)
                    .map_err(|e| self.store_err(e))?;
            }
            "adj" => {
                let f = self.expect_fields(line, 3)?;
                let a = self.resolve(f[1].col, f[1].text)?;
                let b = self.resolve(f[2].col, f[2].text)?;
                self.store
                    .do_set_adjacent(a, b)
                    .map_err(|e| self.store_err(e))?;
            }
            "set" => self.set_record(line)?,
            "frag" => {
                let f = self.expect_fields(line, 5)?;
                let owner = self.resolve(f[1].col, f[1].text)?;
                let part = |i: usize, p: &str| {
                    f[i].text
                        .strip_prefix(p)
                        .ok_or_else(|| self.parse_err(f[i].col, format!("expected `{p}`")))
                };
                let kind = part(2, "kind=")?.to_string();
                let media_type = part(3, "media=")?.to_string();
                let payload = decode_base64(part(4, "data=")?)
                    .ok_or_else(|| self.parse_err(f[4].col + 5, "invalid base64"))?;
                self.store
                    .set_fragment_body(
                        owner,
                        FragmentBody {
                            kind,
                            media_type,
                            payload,
                        },
                    )
                    .map_err(|e| self.store_err(e))?;
            }
            "rule" => {
                let f = self.expect_fields(line, 2)?;
                let mut rule = ql::parse_rule(f[1].text).map_err(|e| self.dsl_err(f[1].col, e))?;
                self.relabel(&mut rule, f[1].col)?;
                self.store
                    .register_rule(rule)
                    .map_err(|e| self.store_err(e))?;
            }
            "pred" => {
                let f = self.expect_fields(line, 3)?;
                let (name, arity) = f[1]
                    .text
                    .split_once('/')
                    .and_then(|(n, a)| Some((n, a.parse::<usize>().ok()?)))
                    .ok_or_else(|| self.parse_err(f[1].col, "expected `name/arity`"))?;
                let (rest, rest_col) = (f[2].text, f[2].col);
                let close = rest.find(") ").filter(|_| rest.starts_with('('));
                let Some(close) = close else {
                    return Err(self.parse_err(rest_col, "expected `(params) formula`"));
                };
                let params: Vec<String> = if close == 1 {
                    Vec::new()
                } else {
                    rest[1..close].split(", ").map(str::to_string).collect()
                };
                if let Some(p) = params.iter().find(|p| !ql::is_plain_name(p)) {
                    return Err(self.parse_err(rest_col, format!("`{p}` is not a parameter name")));
                }
                let body_col = rest_col + close + 2;
                let mut body =
                    ql::parse_formula(&rest[close + 2..]).map_err(|e| self.dsl_err(body_col, e))?;
                self.relabel(&mut body, body_col)?;
                self.store
                    .register_predicate(name, arity, PredicateDef { params, body })
                    .map_err(|e| self.store_err(e))?;
            }
            _ => unreachable!("record kinds are checked by the caller"),
        }
        Ok(())
    }

    fn set_record(&mut self, line: &str) -> PersistResult<()> {
        let f = fields(line, 7);
        if f.len() < 3 {
            return Err(self.parse_err(line.chars().count() + 1, "expected set specification"));
        }
        let c = self.resolve(f[1].col, f[1].text)?;
        let kind = self.store.kind(c).map_err(|e| self.store_err(e))?;
        if !kind.is_container() {
            return Err(self.store_err(crate::error::StoreError::NotAContainer(c, kind)));
        }
        let spec =
            match (f[2].text, f.len()) {
                ("finite", 3) => SetSpec::Finite,
                ("group", 3) => SetSpec::AdjacencyGroup,
                ("countable", 4) => {
                    let g = f[3]
                        .text
                        .strip_prefix("gen=")
                        .ok_or_else(|| self.parse_err(f[3].col, "expected `gen=`"))?;
                    if self.store.registry().generator(g).is_none() {
                        return Err(self.store_err(
                            crate::error::StoreError::UnregisteredGenerator(g.to_string()),
                        ));
                    }
                    return self
                        .store
                        .restore_countable(c, g)
                        .map_err(|m| self.parse_err(f[2].col, m));
                }
                ("derived", 7) => {
                    let op = f[3]
                        .text
                        .strip_prefix("op=")
                        .and_then(SetOp::parse)
                        .ok_or_else(|| {
                            self.parse_err(f[3].col, "expected `op=union|intersect|subtract`")
                        })?;
                    let left = self.resolve(f[4].col, f[4].text)?;
                    let right = self.resolve(f[5].col, f[5].text)?;
                    let identity = IdentityMode::parse(f[6].text)
                        .ok_or_else(|| self.parse_err(f[6].col, "expected `byid` or `byvalue`"))?;
                    SetSpec::Derived {
                        op,
                        left,
                        right,
                        identity,
                    }
                }
                _ => {
                    return Err(self.parse_err(
                        f[2].col,
                        "expected `finite`, `group`, `countable gen=` or `derived op=`",
                    ))
                }
            };
        let line = self.line;
        self.store
            .element_mut(c)
            .map_err(|source| PersistError::Store { line, source })?
            .set_spec = Some(spec);
        Ok(())
    }

    fn value(&self, f: &Field) -> PersistResult<Value> {
        let Some((tag, lit)) = f.text.split_once(':') else {
            return Err(self.parse_err(f.col, "expected `tag:literal`"));
        };
        let col = f.col + tag.len() + 1;
        let bad = || self.parse_err(col, format!("invalid {tag} literal"));
        Ok(match tag {
            "int" => Value::Int(lit.parse().map_err(|_| bad())?),
            "real" => Value::Real(
                lit.parse::<f64>()
                    .ok()
                    .filter(|r| r.is_finite())
                    .ok_or_else(bad)?,
            ),
            "text" => match unquote_prefix(lit) {
                Ok((s, used)) if used == lit.len() => Value::Text(s),
                _ => return Err(bad()),
            },
            "bool" => match lit {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                _ => return Err(bad()),
            },
            "ref" => Value::Ref(self.resolve(col, lit)?),
            "pred" if is_valid_token(lit) => Value::Predicate(lit.to_string()),
            "bytes" => Value::Bytes(decode_base64(lit).ok_or_else(bad)?),
            "time" => Value::Time(Timestamp::parse_rfc3339(lit).ok_or_else(bad)?),
            "pred" => return Err(bad()),
            _ => return Err(self.parse_err(f.col, format!("unknown value tag `{tag}`"))),
        })
    }

    fn dsl_err(&self, col: usize, e: ql::ParseError) -> PersistError {
        self.parse_err(
            col + e.offset,
            format!("expected {}, found {}", e.expected.join(" or "), e.found),
        )
    }

    /// Element ids inside DSL sources are record ordinals.
    fn relabel(&self, item: &mut impl MapIds, col: usize) -> PersistResult<()> {
        item.map_ids(&mut |id: ElementId| {
            usize::try_from(id.0)
                .ok()
                .and_then(|n| n.checked_sub(1))
                .and_then(|i| self.ordinals.get(i).copied())
                .ok_or_else(|| PersistError::DanglingReference {
                    line: self.line,
                    col,
                    label: format!("@#{}", id.to_hex()),
                })
        })
    }
}

pub(crate) fn import_with_ids(
    text: &str,
    base: Store,
    ids: Option<&IdTable>,
) -> PersistResult<Store> {
    if !base.is_empty() {
        return Err(PersistError::ValidationFailed(
            "import target is not empty".into(),
        ));
    }
    let mut lines = text.split('\n');
    let header = lines.next().unwrap_or("");
    if header != HEADER {
        return Err(match header.strip_prefix("#agx ") {
            Some(v) => PersistError::VersionUnsupported(v.to_string()),
            None => PersistError::Parse {
                line: 1,
                col: 1,
                message: format!("expected `{HEADER}`"),
            },
        });
    }
    let mut im = Importer {
        store: base,
        ids,
        labels: HashMap::new(),
        ordinals: Vec::new(),
        attr_count: 0,
        line: 1,
    };
    let mut rank = 0;
    for line in lines {
        im.line += 1;
        if line.is_empty() {
            continue;
        }
        let kind = line.split(' ').next().unwrap_or("");
        let Some(r) = RECORDS.iter().position(|k| *k == kind) else {
            return Err(PersistError::UnknownRecordType {
                line: im.line,
                record: kind.to_string(),
            });
        };
        if r < rank {
            return Err(im.parse_err(
                1,
                format!("`{kind}` record after `{}` records", RECORDS[rank]),
            ));
        }
        rank = r;
        im.record(kind, line)?;
    }
    if let Some(t) = ids {
        if t.elems.len() != im.ordinals.len() || t.attrs.len() != im.attr_count {
            return Err(PersistError::TruncatedSnapshot);
        }
    }
    let report = im.store.validate(im.store.profile());
    if !report.is_conforming() {
        let msgs: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(PersistError::ValidationFailed(msgs.join("; ")));
    }
    Ok(im.store)
}
