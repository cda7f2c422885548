use std::fmt;

use super::ast::*;
use super::printer::print_term;
use crate::element::ElementKind;
use crate::error::{StoreError, StoreResult};
use crate::id::ElementId;
use crate::logic::{
    compare, Binding, CmpOp, ElemRef, Env, Evaluator, InferenceOptions, InferenceRule,
    PredicateDef, Term, TriBool, DEFAULT_HORIZON,
};
use crate::sets::SetSpecArg;
use crate::store::Store;
use crate::value::Value;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct ExecOptions {
    /// Default countable-set horizon for EVAL and rule guards.
    pub horizon: u64,
    /// Default round bound for INFER.
    pub max_iter: usize,
    pub strict: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            horizon: DEFAULT_HORIZON,
            max_iter: 100,
            strict: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Value(Value),
    Truth(TriBool),
    Null,
}

impl Cell {
    /// Rendering for tabular output; element references use tokens where bound.
    pub fn render(&self, store: &Store) -> String {
        match self {
            Cell::Value(Value::Ref(id)) => store
                .token_of(*id)
                .map(str::to_string)
                .unwrap_or_else(|| id.to_hex()),
            Cell::Value(Value::Text(s)) => s.clone(),
            Cell::Value(v) => v.literal(),
            Cell::Truth(t) => t.name().to_string(),
            Cell::Null => String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    /// Error name, or `note` for informational messages.
    pub code: String,
    pub message: String,
    pub span: Span,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}..{}]: {}",
            self.code, self.span.start, self.span.end, self.message
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ResultSet {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.code != "note")
    }

    /// Header line plus one tab-separated line per row.
    pub fn to_tsv(&self, store: &Store) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.render(store)).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    fn note(&mut self, span: Span, message: String) {
        self.diagnostics.push(Diagnostic {
            code: "note".into(),
            message,
            span,
        });
    }
}

fn error_code(e: &StoreError) -> String {
    if let StoreError::UnknownToken(_) = e {
        return "UnknownName".into();
    }
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or("Error")
        .to_string()
}

fn failed(span: Span, e: StoreError) -> ResultSet {
    ResultSet {
        diagnostics: vec![Diagnostic {
            code: error_code(&e),
            message: e.to_string(),
            span,
        }],
        ..Default::default()
    }
}

/// Runs a statement. Errors are reported as diagnostics on the result.
pub fn execute(store: &mut Store, q: &Query, opts: &ExecOptions) -> ResultSet {
    let r = match q {
        Query::Match(_) | Query::Eval(_) => return execute_read(store, q, opts),
        Query::Infer(i) => infer(store, i, opts),
        Query::Set(s) => set_query(store, s),
        Query::Define(d) => define(store, d),
    };
    r.unwrap_or_else(|e| failed(q.span(), e))
}

/// Runs a statement that does not mutate the store.
pub fn execute_read(store: &Store, q: &Query, opts: &ExecOptions) -> ResultSet {
    let r = match q {
        Query::Match(m) => match_query(store, m, opts),
        Query::Eval(e) => eval_query(store, e, opts),
        _ => {
            return ResultSet {
                diagnostics: vec![Diagnostic {
                    code: "ReadOnly".into(),
                    message: "statement mutates the store".into(),
                    span: q.span(),
                }],
                ..Default::default()
            }
        }
    };
    r.unwrap_or_else(|e| failed(q.span(), e))
}

fn match_query(store: &Store, m: &MatchQuery, opts: &ExecOptions) -> StoreResult<ResultSet> {
    let mut rs = ResultSet {
        columns: m.returns.iter().map(print_term).collect(),
        ..Default::default()
    };
    let mut ev = Evaluator::new(store)
        .with_horizon(opts.horizon)
        .strict(opts.strict);
    for id in store.canonical_order()? {
        if m.kind.is_some_and(|k| store.kind(id).ok() != Some(k)) {
            continue;
        }
        let fits = m
            .constraints
            .iter()
            .all(|c| match (store.attribute(id, &c.name), &c.value) {
                (None, _) => false,
                (Some(_), None) => true,
                (Some(v), Some(want)) => compare(v, CmpOp::Eq, want) == TriBool::True,
            });
        if !fits {
            continue;
        }
        let env = Env::new().with(&m.var, Binding::Element(id));
        if let Some(w) = &m.filter {
            if ev.eval(w, &env)? != TriBool::True {
                continue;
            }
        }
        let mut row = Vec::with_capacity(m.returns.len());
        for t in &m.returns {
            row.push(ev.term(t, &env)?.map_or(Cell::Null, Cell::Value));
        }
        rs.rows.push(row);
    }
    for n in ev.notes() {
        rs.note(m.span, n.clone());
    }
    Ok(rs)
}

fn eval_query(store: &Store, e: &EvalQuery, opts: &ExecOptions) -> StoreResult<ResultSet> {
    let mut ev = Evaluator::new(store)
        .with_horizon(e.horizon.unwrap_or(opts.horizon))
        .strict(opts.strict);
    let t = ev.eval(&e.formula, &Env::new())?;
    let mut rs = ResultSet {
        columns: vec!["result".into()],
        rows: vec![vec![Cell::Truth(t)]],
        ..Default::default()
    };
    for n in ev.notes() {
        rs.note(e.span, n.clone());
    }
    Ok(rs)
}

fn infer(store: &mut Store, i: &InferQuery, opts: &ExecOptions) -> StoreResult<ResultSet> {
    let rules: Vec<InferenceRule> = match &i.target {
        InferTarget::All => store.rules().cloned().collect(),
        InferTarget::Items(items) => items
            .iter()
            .map(|it| match it {
                InferItem::Named(n) => store
                    .rule(n)
                    .cloned()
                    .ok_or_else(|| StoreError::UnknownToken(n.clone())),
                InferItem::Inline(r) => Ok(r.clone()),
            })
            .collect::<StoreResult<_>>()?,
    };
    let io = InferenceOptions {
        max_iter: i.max_iter.unwrap_or(opts.max_iter),
        strict: opts.strict,
        horizon: opts.horizon,
    };
    let report = store.run_inference(&rules, io)?;
    let mut rs = ResultSet {
        columns: ["round", "rule", "element", "attribute", "old", "new"]
            .map(String::from)
            .to_vec(),
        ..Default::default()
    };
    for f in report.firings {
        rs.rows.push(vec![
            Cell::Value(Value::Int(f.round as i64)),
            Cell::Value(Value::Text(f.rule)),
            Cell::Value(Value::Ref(f.element)),
            Cell::Value(Value::Text(f.attribute)),
            f.old.map_or(Cell::Null, Cell::Value),
            Cell::Value(f.new),
        ]);
    }
    let msg = if report.fixpoint_reached {
        format!("fixpoint reached after {} rounds", report.rounds)
    } else {
        format!("no fixpoint after {} rounds", report.rounds)
    };
    rs.note(i.span, msg);
    Ok(rs)
}

fn build_set(
    store: &mut Store,
    e: &SetExpr,
    identity: crate::sets::IdentityMode,
) -> StoreResult<ElementId> {
    match e {
        SetExpr::Ref(r) => store.resolve(r),
        SetExpr::Op { op, left, right } => {
            let l = build_set(store, left, identity)?;
            let r = build_set(store, right, identity)?;
            store.set_operation(*op, l, r, identity)
        }
    }
}

fn set_query(store: &mut Store, s: &SetQuery) -> StoreResult<ResultSet> {
    let SetExpr::Op { op, left, right } = &s.expr else {
        return Err(StoreError::NotASet(ElementId(0)));
    };
    store.check_token(&s.target)?;
    let l = build_set(store, left, s.identity)?;
    let r = build_set(store, right, s.identity)?;
    let id = store.create_element(ElementKind::MetaVertex, Some(&s.target))?;
    store.mark_set(
        id,
        SetSpecArg::Derived {
            op: *op,
            left: l,
            right: r,
            identity: s.identity,
        },
    )?;
    let mut rs = ResultSet {
        columns: vec!["element".into()],
        ..Default::default()
    };
    for m in store.extension(id)? {
        rs.rows.push(vec![Cell::Value(Value::Ref(m))]);
    }
    Ok(rs)
}

fn resolve_all(store: &Store, rs: &[ElemRef]) -> StoreResult<Vec<ElementId>> {
    rs.iter().map(|r| store.resolve(r)).collect()
}

fn eval_values(store: &Store, attrs: &[(String, Term)]) -> StoreResult<Vec<(String, Value)>> {
    let mut ev = Evaluator::new(store);
    attrs
        .iter()
        .map(|(n, t)| match ev.term(t, &Env::new())? {
            Some(v) => Ok((n.clone(), v)),
            None => Err(StoreError::InvalidName(format!("{n}: value is undefined"))),
        })
        .collect()
}

/// Resolves every reference before the first mutation, so a failing
/// definition leaves the store as it was in all but pathological cases.
fn define(store: &mut Store, d: &Define) -> StoreResult<ResultSet> {
    let mut created = None;
    match &d.item {
        DefineItem::Element {
            kind,
            token,
            attrs,
            members,
        } => {
            let values = eval_values(store, attrs)?;
            let members = resolve_all(store, members)?;
            store.check_token(token)?;
            let id = store.create_element(*kind, Some(token))?;
            for (n, v) in values {
                store.set_attribute(id, &n, v)?;
            }
            for m in members {
                store.add_member(id, m)?;
            }
            created = Some(id);
        }
        DefineItem::Function { token, function } => {
            created = Some(store.create_function(function, Some(token))?);
        }
        DefineItem::Link {
            kind,
            token,
            from,
            to,
            directed,
            attrs,
            members,
        } => {
            let values = eval_values(store, attrs)?;
            let from = resolve_all(store, from)?;
            let to = resolve_all(store, to)?;
            let members = resolve_all(store, members)?;
            if let Some(t) = token {
                store.check_token(t)?;
            }
            store.check_endpoints(&from, &to)?;
            let id = store.create_named_link(*kind, token.as_deref(), &from, &to, *directed)?;
            for (n, v) in values {
                store.set_attribute(id, &n, v)?;
            }
            for m in members {
                store.add_member(id, m)?;
            }
            created = Some(id);
        }
        DefineItem::Member { container, members } => {
            let c = store.resolve(container)?;
            for m in resolve_all(store, members)? {
                store.add_member(c, m)?;
            }
        }
        DefineItem::Adjacent { a, b } => {
            let a = store.resolve(a)?;
            let b = store.resolve(b)?;
            store.set_adjacent(a, b)?;
        }
        DefineItem::Attr { owner, name, value } => {
            let owner = store.resolve(owner)?;
            let (_, v) = eval_values(store, &[(name.clone(), value.clone())])?.remove(0);
            store.set_attribute(owner, name, v)?;
        }
        DefineItem::Set { container, kind } => {
            let c = store.resolve(container)?;
            let spec = match kind {
                SetKind::Finite => SetSpecArg::Finite,
                SetKind::Group => SetSpecArg::AdjacencyGroup,
                SetKind::Countable(g) => SetSpecArg::Countable {
                    generator: g.clone(),
                },
            };
            store.mark_set(c, spec)?;
        }
        DefineItem::Predicate { name, params, body } => {
            store.register_predicate(
                name,
                params.len(),
                PredicateDef {
                    params: params.clone(),
                    body: body.clone(),
                },
            )?;
        }
        DefineItem::Rule(r) => store.register_rule(r.clone())?,
    }
    let mut rs = ResultSet {
        columns: vec!["element".into()],
        ..Default::default()
    };
    if let Some(id) = created {
        rs.rows.push(vec![Cell::Value(Value::Ref(id))]);
    }
    Ok(rs)
}
