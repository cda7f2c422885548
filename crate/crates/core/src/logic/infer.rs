use std::collections::BTreeMap;

use super::eval::{Binding, Env, Evaluator, DEFAULT_HORIZON};
use super::formula::InferenceRule;
use super::TriBool;
use crate::error::{StoreError, StoreResult};
use crate::id::ElementId;
use crate::store::Store;
use crate::value::Value;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct InferenceOptions {
    pub max_iter: usize,
    /// Fail with `MaxIterationsExceeded` instead of reporting a missing fixpoint.
    pub strict: bool,
    pub horizon: u64,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            max_iter: 100,
            strict: false,
            horizon: DEFAULT_HORIZON,
        }
    }
}

/// An assignment that changed a value.
#[derive(Clone, Debug, PartialEq)]
pub struct Firing {
    pub round: usize,
    pub rule: String,
    pub element: ElementId,
    pub attribute: String,
    pub old: Option<Value>,
    pub new: Value,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InferenceReport {
    pub firings: Vec<Firing>,
    pub rounds: usize,
    pub fixpoint_reached: bool,
}

struct Assignment<'r> {
    rule: &'r str,
    element: ElementId,
    attribute: &'r str,
    value: Value,
}

impl Store {
    /// Forward chaining to a fixpoint. Each round evaluates every rule
    /// against the state at the start of the round, then applies the
    /// assignments that change something. The store is left untouched on error.
    pub fn run_inference(
        &mut self,
        rules: &[InferenceRule],
        opts: InferenceOptions,
    ) -> StoreResult<InferenceReport> {
        for r in rules {
            r.check_bound()?;
        }
        let mut work = self.clone();
        let mut report = InferenceReport::default();
        // (element, attribute) -> (rule, value) over the whole run
        let mut assigned: BTreeMap<(ElementId, String), (String, Value)> = BTreeMap::new();
        for round in 1..=opts.max_iter.max(1) {
            report.rounds = round;
            let pending = collect_assignments(&work, rules, opts.horizon)?;
            let mut changes = Vec::new();
            let mut this_round: BTreeMap<(ElementId, &str), (&str, &Value)> = BTreeMap::new();
            for a in &pending {
                if let Some((rule, v)) = this_round.get(&(a.element, a.attribute)) {
                    if **v != a.value {
                        return Err(conflict(a.element, a.attribute, rule, a.rule));
                    }
                    continue;
                }
                this_round.insert((a.element, a.attribute), (a.rule, &a.value));
                if let Some((rule, v)) = assigned.get(&(a.element, a.attribute.to_string())) {
                    if rule != a.rule && *v != a.value {
                        return Err(conflict(a.element, a.attribute, rule, a.rule));
                    }
                }
                let old = work.attribute(a.element, a.attribute).cloned();
                if old.as_ref() != Some(&a.value) {
                    changes.push(Firing {
                        round,
                        rule: a.rule.to_string(),
                        element: a.element,
                        attribute: a.attribute.to_string(),
                        old,
                        new: a.value.clone(),
                    });
                }
            }
            for a in pending {
                assigned.insert(
                    (a.element, a.attribute.to_string()),
                    (a.rule.to_string(), a.value),
                );
            }
            if changes.is_empty() {
                report.fixpoint_reached = true;
                break;
            }
            for f in &changes {
                work.set_attribute(f.element, &f.attribute, f.new.clone())?;
            }
            report.firings.extend(changes);
        }
        if !report.fixpoint_reached && opts.strict {
            return Err(StoreError::MaxIterationsExceeded(report.rounds));
        }
        *self = work;
        Ok(report)
    }

    /// Runs every registered rule.
    pub fn run_registered_rules(&mut self, opts: InferenceOptions) -> StoreResult<InferenceReport> {
        let rules: Vec<InferenceRule> = self.rules().cloned().collect();
        self.run_inference(&rules, opts)
    }
}

fn conflict(element: ElementId, attribute: &str, first: &str, second: &str) -> StoreError {
    StoreError::ConflictingAssignment {
        element,
        attribute: attribute.to_string(),
        first: first.to_string(),
        second: second.to_string(),
    }
}

fn collect_assignments<'r>(
    store: &Store,
    rules: &'r [InferenceRule],
    horizon: u64,
) -> StoreResult<Vec<Assignment<'r>>> {
    let mut out = Vec::new();
    let mut ev = Evaluator::new(store).with_horizon(horizon);
    for rule in rules {
        let candidates: Vec<Vec<ElementId>> = rule
            .sources
            .iter()
            .map(|p| {
                store
                    .nodes()
                    .filter(|e| p.kind.is_none_or(|k| e.kind() == k))
                    .filter(|e| {
                        p.required_attrs
                            .iter()
                            .all(|a| store.attribute(e.id(), a).is_some())
                    })
                    .map(|e| e.id())
                    .collect()
            })
            .collect();
        bind(store, &mut ev, rule, &candidates, 0, Env::new(), &mut out)?;
    }
    Ok(out)
}

fn bind<'r>(
    store: &Store,
    ev: &mut Evaluator<'_>,
    rule: &'r InferenceRule,
    candidates: &[Vec<ElementId>],
    depth: usize,
    env: Env,
    out: &mut Vec<Assignment<'r>>,
) -> StoreResult<()> {
    if depth == rule.sources.len() {
        let Some(Binding::Element(target)) = env.get(&rule.target_var).cloned() else {
            return Ok(());
        };
        if let Some(value) = ev.term(&rule.value, &env)? {
            store.check_value(&value)?;
            out.push(Assignment {
                rule: &rule.name,
                element: target,
                attribute: &rule.target_attr,
                value,
            });
        }
        return Ok(());
    }
    let pattern = &rule.sources[depth];
    for &c in &candidates[depth] {
        let env = env.clone().with(&pattern.var, Binding::Element(c));
        // Unknown guards do not fire
        if ev.eval(&pattern.guard, &env)? == TriBool::True {
            bind(store, ev, rule, candidates, depth + 1, env, out)?;
        }
    }
    Ok(())
}
