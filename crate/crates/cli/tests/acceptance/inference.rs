use std::collections::BTreeMap;

use agx_core::logic::InferenceOptions;
use agx_core::logic::{CmpOp, InferenceRule};
use agx_core::persist::export_text;
use agx_core::{ql, ElementId, ElementKind, Store, StoreError, Value};
use rand::seq::SliceRandom;
use rand::Rng;

use super::gen::{self, cmp_holds, R};
use crate::{ensure, Outcome};

const STORES: usize = 500;
const CONFLICTS: usize = 100;
const SLOTS: usize = 6;

#[derive(Clone, Debug)]
enum Val {
    Const(i64),
    Copy,
    Plus(i64),
}

/// `FROM (x:vertex {a<src>}) [WHERE x.a<src> op k] [, (y:vertex {a<m>}) WHERE y.a<m> > x.a<src>]
/// SET x.a<target> := value`
#[derive(Clone, Debug)]
struct Spec {
    name: String,
    src: usize,
    guard: Option<(CmpOp, i64)>,
    other: Option<usize>,
    target: usize,
    value: Val,
}

impl Spec {
    fn random(rng: &mut R, name: String, target: usize) -> Spec {
        let other = rng.gen_bool(0.3).then(|| rng.gen_range(0..target));
        Spec {
            name,
            src: rng.gen_range(0..target),
            guard: rng
                .gen_bool(0.6)
                .then(|| (*CmpOp::ALL.choose(rng).unwrap(), rng.gen_range(-2..6))),
            // Several partners may bind, so the value must not depend on them.
            value: match rng.gen_range(0..3) {
                0 => Val::Const(rng.gen_range(-5..5)),
                1 if other.is_none() => Val::Copy,
                _ if other.is_none() => Val::Plus(rng.gen_range(-3..4)),
                _ => Val::Const(rng.gen_range(-5..5)),
            },
            other,
            target,
        }
    }

    fn source(&self) -> String {
        let mut s = format!("{} FROM (x:vertex {{a{}}})", self.name, self.src);
        if let Some((op, k)) = self.guard {
            s += &format!(" WHERE x.a{} {} {k}", self.src, op.symbol());
        }
        if let Some(m) = self.other {
            s += &format!(", (y:vertex {{a{m}}}) WHERE y.a{m} > x.a{}", self.src);
        }
        let value = match self.value {
            Val::Const(c) => c.to_string(),
            Val::Copy => format!("x.a{}", self.src),
            Val::Plus(k) => format!("add(x.a{}, {k})", self.src),
        };
        s + &format!(" SET x.a{} := {value}", self.target)
    }

    fn rule(&self) -> InferenceRule {
        ql::parse_rule(&self.source()).expect("generated rule parses")
    }
}

type Slots = BTreeMap<usize, i64>;

/// Naive bottom-up evaluation on plain maps: every round fires every rule
/// on the state at the start of the round, until nothing changes.
fn oracle(vertices: &[Slots], specs: &[Spec]) -> Vec<Slots> {
    let mut state = vertices.to_vec();
    for _ in 0..1000 {
        let mut next = state.clone();
        for sp in specs {
            for (i, x) in state.iter().enumerate() {
                let Some(&xs) = x.get(&sp.src) else { continue };
                if let Some((op, k)) = sp.guard {
                    if !cmp_holds(xs, op, k) {
                        continue;
                    }
                }
                if let Some(m) = sp.other {
                    if !state.iter().any(|y| y.get(&m).is_some_and(|&ym| ym > xs)) {
                        continue;
                    }
                }
                let v = match sp.value {
                    Val::Const(c) => c,
                    Val::Copy => xs,
                    Val::Plus(k) => xs + k,
                };
                next[i].insert(sp.target, v);
            }
        }
        if next == state {
            return state;
        }
        state = next;
    }
    panic!("oracle did not converge");
}

struct World {
    store: Store,
    vertices: Vec<ElementId>,
    initial: Vec<Slots>,
}

fn world(rng: &mut R) -> World {
    let mut store = Store::new();
    let mut vertices = Vec::new();
    let mut initial = Vec::new();
    let nv = rng.gen_range(1..=5);
    for _ in 0..nv {
        let v = store.create_element(ElementKind::Vertex, None).unwrap();
        let mut slots = Slots::new();
        for slot in 0..SLOTS {
            if rng.gen_bool(0.3) && store.len() < 19 {
                let x = rng.gen_range(-3..6);
                store.set_attribute(v, &format!("a{slot}"), Value::Int(x)).unwrap();
                slots.insert(slot, x);
            }
        }
        vertices.push(v);
        initial.push(slots);
    }
    // A non-vertex carrying the same attributes must be left alone.
    if store.len() < 19 {
        let m = store.create_element(ElementKind::MetaVertex, None).unwrap();
        store.set_attribute(m, "a0", Value::Int(1)).unwrap();
    }
    assert!(store.len() <= 20);
    World {
        store,
        vertices,
        initial,
    }
}

fn random_specs(rng: &mut R) -> Vec<Spec> {
    let count = rng.gen_range(1..=6);
    // Distinct targets above the sources keep rules from conflicting.
    let mut targets: Vec<usize> = (1..SLOTS).collect();
    targets.shuffle(rng);
    targets
        .into_iter()
        .take(count.min(SLOTS - 1))
        .enumerate()
        .map(|(i, t)| Spec::random(rng, format!("r{i}"), t))
        .collect()
}

fn read_slots(s: &Store, v: ElementId) -> Slots {
    (0..SLOTS)
        .filter_map(|i| match s.attribute(v, &format!("a{i}")) {
            Some(Value::Int(x)) => Some((i, *x)),
            Some(other) => panic!("a{i} holds {other:?}"),
            None => None,
        })
        .collect()
}

pub fn run() -> Outcome {
    let mut rng = gen::rng(0x5eed_0005);
    let opts = InferenceOptions::default();
    let mut firings = 0;
    let mut rules_total = 0;
    for n in 0..STORES {
        let w = world(&mut rng);
        let specs = random_specs(&mut rng);
        rules_total += specs.len();
        let rules: Vec<InferenceRule> = specs.iter().map(Spec::rule).collect();
        let want = oracle(&w.initial, &specs);

        let mut s = w.store.clone();
        let report = s
            .run_inference(&rules, opts)
            .map_err(|e| format!("store {n}: {e}; rules {specs:?}"))?;
        ensure!(report.fixpoint_reached, "store {n}: no fixpoint after {} rounds", report.rounds);
        firings += report.firings.len();
        for (i, &v) in w.vertices.iter().enumerate() {
            let got = read_slots(&s, v);
            ensure!(
                got == want[i],
                "store {n}: vertex {i} ended with {got:?}, oracle {:?}; rules {:?}",
                want[i],
                specs.iter().map(Spec::source).collect::<Vec<_>>()
            );
        }
        let reference = export_text(&s).unwrap();
        for _ in 0..3 {
            let mut shuffled = rules.clone();
            shuffled.shuffle(&mut rng);
            let mut t = w.store.clone();
            t.run_inference(&shuffled, opts)
                .map_err(|e| format!("store {n}: permuted rules fail: {e}"))?;
            ensure!(
                export_text(&t).unwrap() == reference,
                "store {n}: result depends on rule order"
            );
        }
    }

    let mut named = 0;
    for n in 0..CONFLICTS {
        let mut w = world(&mut rng);
        let v = w.vertices[0];
        w.store.set_attribute(v, "a0", Value::Int(1)).unwrap();
        let mut specs = random_specs(&mut rng);
        let (c1, c2) = (format!("clash{n}a"), format!("clash{n}b"));
        let x = rng.gen_range(-5..5);
        let src = format!("(x:vertex {{a0}}) SET x.z := {x}");
        let src2 = format!("(x:vertex {{a0}}) SET x.z := {}", x + rng.gen_range(1..4));
        let mut rules: Vec<InferenceRule> = specs.drain(..).map(|s| s.rule()).collect();
        rules.push(ql::parse_rule(&format!("{c1} FROM {src}")).unwrap());
        rules.push(ql::parse_rule(&format!("{c2} FROM {src2}")).unwrap());
        rules.shuffle(&mut rng);
        let before = export_text(&w.store).unwrap();
        match w.store.run_inference(&rules, opts) {
            Err(StoreError::ConflictingAssignment { first, second, .. }) => {
                let mut got = [first, second];
                got.sort();
                ensure!(got == [c1.clone(), c2.clone()], "conflict {n}: named {got:?}");
                ensure!(export_text(&w.store).unwrap() == before, "conflict {n}: store modified");
                named += 1;
            }
            other => return Err(format!("conflict {n}: expected ConflictingAssignment, got {other:?}")),
        }
    }
    ensure!(named == CONFLICTS, "{named}/{CONFLICTS} conflicts named both rules");
    Ok(format!(
        "{STORES} stores with {rules_total} rules ({firings} firings) match the oracle under 3 permutations each; \
         {named}/{CONFLICTS} conflicts named both rules"
    ))
}
