use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::rc::Rc;

use super::formula::{CmpOp, ElemRef, FnTarget, Formula, Modality, PredName, Subject, Term};
use super::{TriBool, BUILTIN_APPROX};
use crate::canon::{vertex_form, EqualityMode};
use crate::element::ElementKind;
use crate::error::{StoreError, StoreResult};
use crate::id::ElementId;
use crate::sets::CountableItem;
use crate::store::Store;
use crate::value::Value;

/// Attribute on edges that marks a world as accessible to an agent.
pub const RELATION_ATTR: &str = "agx.relation";
pub const ACCESSIBLE: &str = "accessible";
/// Attribute ordering the instants of a temporal frame.
pub const TIME_ATTR: &str = "t";

pub const DEFAULT_HORIZON: u64 = 1000;
const MAX_PREDICATE_DEPTH: usize = 64;

/// What a variable stands for.
#[derive(Clone, Debug, PartialEq)]
pub enum Binding {
    Element(ElementId),
    /// A countable-set object that has not been materialized.
    Virtual(Rc<Vec<(String, Value)>>),
    Value(Value),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Env {
    vars: BTreeMap<String, Binding>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn with(mut self, name: &str, b: Binding) -> Self {
        self.bind(name, b);
        self
    }

    pub fn bind(&mut self, name: &str, b: Binding) {
        self.vars.insert(name.to_string(), b);
    }

    pub fn get(&self, name: &str) -> Option<&Binding> {
        self.vars.get(name)
    }

    fn extended(&self, name: &str, b: Binding) -> Env {
        self.clone().with(name, b)
    }
}

/// Read-only formula evaluator over one store.
pub struct Evaluator<'s> {
    store: &'s Store,
    horizon: u64,
    strict: bool,
    now: usize,
    depth: usize,
    notes: Vec<String>,
}

impl<'s> Evaluator<'s> {
    pub fn new(store: &'s Store) -> Self {
        Evaluator {
            store,
            horizon: DEFAULT_HORIZON,
            strict: false,
            now: 0,
            depth: 0,
            notes: Vec::new(),
        }
    }

    /// How many objects of a countable set a quantifier may inspect.
    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    /// Strict mode turns empty modal frames into errors.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    /// Index of the current instant in temporal frames (default 0).
    pub fn at_instant(mut self, now: usize) -> Self {
        self.now = now;
        self
    }

    /// Diagnostics such as vacuously evaluated empty frames.
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn eval(&mut self, f: &Formula, env: &Env) -> StoreResult<TriBool> {
        match f {
            Formula::Truth(t) => Ok(*t),
            Formula::Compare { lhs, op, rhs } => {
                let (Some(a), Some(b)) = (self.term(lhs, env)?, self.term(rhs, env)?) else {
                    return Ok(TriBool::Unknown);
                };
                Ok(compare(&a, *op, &b))
            }
            Formula::Predicate { name, args } => self.predicate(name, args, env),
            Formula::Not(g) => Ok(!self.eval(g, env)?),
            Formula::And(fs) => {
                let mut acc = TriBool::True;
                for g in fs {
                    acc = acc & self.eval(g, env)?;
                }
                Ok(acc)
            }
            Formula::Or(fs) => {
                let mut acc = TriBool::False;
                for g in fs {
                    acc = acc | self.eval(g, env)?;
                }
                Ok(acc)
            }
            Formula::ForAll { var, set, body } => self.quantify(true, var, set, body, env),
            Formula::Exists { var, set, body } => self.quantify(false, var, set, body, env),
            Formula::Modal {
                op,
                var,
                frame,
                body,
            } => self.modal(op, var, frame, body, env),
            Formula::EqualsElem { a, b, mode } => {
                let a = self.subject(a, env)?;
                let b = self.subject(b, env)?;
                self.equal_bindings(&a, &b, *mode)
            }
        }
    }

    /// Value of a term; `None` when undefined (missing attribute, function
    /// outside its domain, a virtual object used as a value).
    pub fn term(&mut self, t: &Term, env: &Env) -> StoreResult<Option<Value>> {
        match t {
            Term::Literal(v) => Ok(Some(v.clone())),
            Term::Var(v) => Ok(match lookup(env, v)? {
                Binding::Element(id) => Some(Value::Ref(*id)),
                Binding::Value(v) => Some(v.clone()),
                Binding::Virtual(_) => None,
            }),
            Term::Elem(r) => Ok(Some(Value::Ref(self.store.resolve(r)?))),
            Term::Attr { subject, name } => {
                let b = self.subject(subject, env)?;
                Ok(self.attribute_of(&b, name))
            }
            Term::Apply { target, args } => {
                let name = match target {
                    FnTarget::Named(n) => n.clone(),
                    FnTarget::Node(r) => {
                        let id = self.store.resolve(r)?;
                        self.store
                            .function_ref(id)
                            .ok_or(StoreError::NotAFunction(id))?
                            .to_string()
                    }
                };
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    match self.term(a, env)? {
                        Some(v) => vals.push(v),
                        None => return Ok(None),
                    }
                }
                match self.store.call_function(&name, &vals) {
                    Ok(v) => Ok(Some(v)),
                    Err(StoreError::FunctionUndefined(_)) => Ok(None),
                    Err(e) => Err(e),
                }
            }
        }
    }

    fn subject(&self, s: &Subject, env: &Env) -> StoreResult<Binding> {
        match s {
            Subject::Var(v) => Ok(lookup(env, v)?.clone()),
            Subject::Elem(r) => Ok(Binding::Element(self.store.resolve(r)?)),
        }
    }

    fn attribute_of(&self, b: &Binding, name: &str) -> Option<Value> {
        match b {
            Binding::Element(id) | Binding::Value(Value::Ref(id)) => {
                self.store.attribute(*id, name).cloned()
            }
            Binding::Virtual(attrs) => attrs
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone()),
            Binding::Value(_) => None,
        }
    }

    fn binding_of_term(&mut self, t: &Term, env: &Env) -> StoreResult<Option<Binding>> {
        match t {
            Term::Var(v) => Ok(Some(lookup(env, v)?.clone())),
            Term::Elem(r) => Ok(Some(Binding::Element(self.store.resolve(r)?))),
            other => Ok(self.term(other, env)?.map(|v| match v {
                Value::Ref(id) => Binding::Element(id),
                v => Binding::Value(v),
            })),
        }
    }

    fn predicate(&mut self, name: &PredName, args: &[Term], env: &Env) -> StoreResult<TriBool> {
        let name = match name {
            PredName::Named(n) => n.clone(),
            PredName::Attr { subject, attr } => {
                let b = self.subject(subject, env)?;
                match self.attribute_of(&b, attr) {
                    Some(Value::Predicate(n)) => n,
                    _ => return Ok(TriBool::Unknown),
                }
            }
        };
        if name == BUILTIN_APPROX {
            if args.len() != 3 {
                return Err(StoreError::ArityMismatch {
                    name,
                    expected: 3,
                    got: args.len(),
                });
            }
            let mut vals = Vec::new();
            for a in args {
                match self.term(a, env)?.as_ref().and_then(as_f64) {
                    Some(x) => vals.push(x),
                    None => return Ok(TriBool::Unknown),
                }
            }
            return Ok(TriBool::from((vals[0] - vals[1]).abs() <= vals[2]));
        }
        let def = self
            .store
            .predicate(&name)
            .ok_or_else(|| StoreError::UnknownPredicate(name.clone()))?;
        if def.params.len() != args.len() {
            return Err(StoreError::ArityMismatch {
                name,
                expected: def.params.len(),
                got: args.len(),
            });
        }
        if self.depth >= MAX_PREDICATE_DEPTH {
            return Err(StoreError::DepthLimitExceeded(MAX_PREDICATE_DEPTH));
        }
        let mut inner = Env::new();
        for (p, a) in def.params.iter().zip(args) {
            match self.binding_of_term(a, env)? {
                Some(b) => inner.bind(p, b),
                None => return Ok(TriBool::Unknown),
            }
        }
        self.depth += 1;
        let r = self.eval(&def.body, &inner);
        self.depth -= 1;
        r
    }

    fn quantify(
        &mut self,
        universal: bool,
        var: &str,
        set: &ElemRef,
        body: &Formula,
        env: &Env,
    ) -> StoreResult<TriBool> {
        let set = self.store.resolve(set)?;
        // the neutral element of the fold; a decisive value short-circuits
        let (neutral, decisive) = if universal {
            (TriBool::True, TriBool::False)
        } else {
            (TriBool::False, TriBool::True)
        };
        if self.store.is_countable(set) {
            for i in 0..self.horizon {
                let b = match self.store.countable_item(set, i)? {
                    CountableItem::Materialized(id) => Binding::Element(id),
                    CountableItem::Virtual(attrs) => Binding::Virtual(Rc::new(attrs)),
                };
                if self.eval(body, &env.extended(var, b))? == decisive {
                    return Ok(decisive);
                }
            }
            return Ok(TriBool::Unknown);
        }
        let members = self.store.extension(set)?;
        let mut acc = neutral;
        for m in members {
            let r = self.eval(body, &env.extended(var, Binding::Element(m)))?;
            if r == decisive {
                return Ok(decisive);
            }
            if r == TriBool::Unknown {
                acc = TriBool::Unknown;
            }
        }
        Ok(acc)
    }

    fn all_over(
        &mut self,
        worlds: &[ElementId],
        var: &str,
        body: &Formula,
        env: &Env,
        negate: bool,
    ) -> StoreResult<TriBool> {
        let mut acc = TriBool::True;
        for &w in worlds {
            let r = self.eval(body, &env.extended(var, Binding::Element(w)))?;
            acc = acc & if negate { !r } else { r };
            if acc == TriBool::False {
                break;
            }
        }
        Ok(acc)
    }

    fn any_over(
        &mut self,
        worlds: &[ElementId],
        var: &str,
        body: &Formula,
        env: &Env,
    ) -> StoreResult<TriBool> {
        let mut acc = TriBool::False;
        for &w in worlds {
            acc = acc | self.eval(body, &env.extended(var, Binding::Element(w)))?;
            if acc == TriBool::True {
                break;
            }
        }
        Ok(acc)
    }

    fn modal(
        &mut self,
        op: &Modality,
        var: &str,
        frame: &ElemRef,
        body: &Formula,
        env: &Env,
    ) -> StoreResult<TriBool> {
        let frame = self.store.resolve(frame)?;
        let temporal = matches!(
            op,
            Modality::Always | Modality::Eventually | Modality::Next | Modality::Until { .. }
        );
        let mut worlds = self.store.extension(frame)?;
        if temporal {
            worlds = self.order_instants(frame, worlds)?;
        }
        if let Modality::Known { agent } | Modality::Believed { agent } = op {
            let agent = self.store.resolve(agent)?;
            worlds.retain(|&w| self.accessible(agent, w));
        }
        if worlds.is_empty() {
            if self.strict {
                return Err(StoreError::EmptyFrame(frame));
            }
            self.notes.push(format!(
                "frame {frame} is empty; {} evaluated vacuously",
                op.keyword()
            ));
        }
        match op {
            Modality::Necessary | Modality::Known { .. } | Modality::Believed { .. } => {
                self.all_over(&worlds, var, body, env, false)
            }
            Modality::Obligatory | Modality::Good => self.all_over(&worlds, var, body, env, false),
            Modality::Forbidden | Modality::Bad => self.all_over(&worlds, var, body, env, true),
            Modality::Possible | Modality::Permitted => self.any_over(&worlds, var, body, env),
            Modality::Always => {
                let from = self.now.min(worlds.len());
                self.all_over(&worlds[from..], var, body, env, false)
            }
            Modality::Eventually => {
                let from = self.now.min(worlds.len());
                self.any_over(&worlds[from..], var, body, env)
            }
            Modality::Next => match worlds.get(self.now + 1) {
                Some(&w) => self.eval(body, &env.extended(var, Binding::Element(w))),
                None => Ok(TriBool::Unknown),
            },
            Modality::Until { goal } => {
                // exists k >= now: goal(k) and body(j) for now <= j < k
                let mut result = TriBool::False;
                let mut prefix = TriBool::True;
                for &w in worlds.iter().skip(self.now) {
                    let e = env.extended(var, Binding::Element(w));
                    let g = self.eval(goal, &e)?;
                    result = result | (prefix & g);
                    if result == TriBool::True {
                        break;
                    }
                    prefix = prefix & self.eval(body, &e)?;
                    if prefix == TriBool::False {
                        break;
                    }
                }
                Ok(result)
            }
        }
    }

    fn order_instants(
        &self,
        frame: ElementId,
        worlds: Vec<ElementId>,
    ) -> StoreResult<Vec<ElementId>> {
        let mut keyed = Vec::with_capacity(worlds.len());
        for w in worlds {
            let t = self
                .store
                .attribute(w, TIME_ATTR)
                .and_then(as_f64)
                .ok_or(StoreError::UnorderedTemporalFrame(frame))?;
            keyed.push((t, w));
        }
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        if keyed.windows(2).any(|p| p[0].0 == p[1].0) {
            return Err(StoreError::UnorderedTemporalFrame(frame));
        }
        Ok(keyed.into_iter().map(|(_, w)| w).collect())
    }

    fn accessible(&self, agent: ElementId, world: ElementId) -> bool {
        self.store.nodes().any(|e| {
            e.kind() == ElementKind::Edge
                && self
                    .store
                    .attribute(e.id(), RELATION_ATTR)
                    .and_then(Value::as_text)
                    == Some(ACCESSIBLE)
                && e.endpoints()
                    .is_some_and(|ends| ends.from.contains(&agent) && ends.to.contains(&world))
        })
    }

    fn equal_bindings(&self, a: &Binding, b: &Binding, mode: EqualityMode) -> StoreResult<TriBool> {
        let form = |x: &Binding| -> StoreResult<Option<String>> {
            Ok(match x {
                Binding::Element(id) | Binding::Value(Value::Ref(id)) => {
                    Some(self.store.canonical_form(*id, mode)?)
                }
                Binding::Virtual(attrs) => Some(vertex_form(attrs, mode)),
                Binding::Value(_) => None,
            })
        };
        match (form(a)?, form(b)?) {
            (Some(x), Some(y)) => Ok(TriBool::from(x == y)),
            _ => Ok(TriBool::Unknown),
        }
    }
}

fn lookup<'e>(env: &'e Env, v: &str) -> StoreResult<&'e Binding> {
    env.get(v)
        .ok_or_else(|| StoreError::UnboundVariable(v.to_string()))
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Int(i) => Some(*i as f64),
        Value::Real(r) => Some(*r),
        _ => None,
    }
}

/// Exact ordering of an integer against a finite real.
fn cmp_int_real(i: i64, r: f64) -> Ordering {
    const LIMIT: f64 = 9.223_372_036_854_776e18; // 2^63
    if r >= LIMIT {
        return Ordering::Less;
    }
    if r < -LIMIT {
        return Ordering::Greater;
    }
    let whole = r.trunc();
    match i.cmp(&(whole as i64)) {
        Ordering::Equal if r > whole => Ordering::Less,
        Ordering::Equal if r < whole => Ordering::Greater,
        o => o,
    }
}

/// Ordering of two values, `None` when the tags are incomparable.
pub fn value_order(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Real(x), Value::Real(y)) => x.partial_cmp(y),
        (Value::Int(x), Value::Real(y)) => Some(cmp_int_real(*x, *y)),
        (Value::Real(x), Value::Int(y)) => Some(cmp_int_real(*y, *x).reverse()),
        (Value::Text(x), Value::Text(y)) => Some(x.cmp(y)),
        (Value::Time(x), Value::Time(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

/// Three-valued comparison; equality is exact and incompatible tags give Unknown.
pub fn compare(a: &Value, op: CmpOp, b: &Value) -> TriBool {
    if let Some(o) = value_order(a, b) {
        return TriBool::from(match op {
            CmpOp::Eq => o == Ordering::Equal,
            CmpOp::Ne => o != Ordering::Equal,
            CmpOp::Gt => o == Ordering::Greater,
            CmpOp::Lt => o == Ordering::Less,
            CmpOp::Ge => o != Ordering::Less,
            CmpOp::Le => o != Ordering::Greater,
        });
    }
    if a.tag() != b.tag() {
        return TriBool::Unknown;
    }
    match op {
        CmpOp::Eq => TriBool::from(a == b),
        CmpOp::Ne => TriBool::from(a != b),
        _ => TriBool::Unknown,
    }
}

impl Store {
    pub fn eval_formula(&self, f: &Formula, env: &Env, horizon: u64) -> StoreResult<TriBool> {
        Evaluator::new(self).with_horizon(horizon).eval(f, env)
    }

    /// Calls a registered function by name.
    pub fn call_function(&self, name: &str, args: &[Value]) -> StoreResult<Value> {
        let def = self
            .registry()
            .function(name)
            .ok_or_else(|| StoreError::UnregisteredFunction(name.to_string()))?;
        if def.arity != args.len() {
            return Err(StoreError::ArityMismatch {
                name: name.to_string(),
                expected: def.arity,
                got: args.len(),
            });
        }
        (def.hook)(args).ok_or_else(|| StoreError::FunctionUndefined(name.to_string()))
    }

    /// Calls the function bound to a Function element.
    pub fn eval_function_node(&self, node: ElementId, args: &[Value]) -> StoreResult<Value> {
        if self.kind(node)? != ElementKind::Function {
            return Err(StoreError::NotAFunction(node));
        }
        let name = self
            .function_ref(node)
            .ok_or(StoreError::NotAFunction(node))?
            .to_string();
        self.call_function(&name, args)
    }
}
