use std::collections::{BTreeMap, BTreeSet};

use agx_core::{ElementId, ElementKind, EqualityMode, IdentityMode, SetOp, SetSpecArg, Store, Value};
use rand::seq::SliceRandom;
use rand::Rng;

use super::gen::{self, R};
use crate::{ensure, Outcome};

const CASES: usize = 10_000;

type Key = (Option<i64>, Option<&'static str>);

struct Case {
    store: Store,
    keys: BTreeMap<ElementId, Key>,
    a: ElementId,
    b: ElementId,
    a_members: Vec<ElementId>,
    b_members: Vec<ElementId>,
}

fn finite(s: &mut Store, members: &[ElementId]) -> ElementId {
    let c = s.create_element(ElementKind::MetaVertex, None).unwrap();
    for &m in members {
        s.add_member(c, m).unwrap();
    }
    s.mark_set(c, SetSpecArg::Finite).unwrap();
    c
}

fn case(rng: &mut R) -> Case {
    let mut store = Store::new();
    let mut keys = BTreeMap::new();
    let pool = rng.gen_range(1..=40);
    let mut ids = Vec::new();
    for _ in 0..pool {
        let v = store.create_element(ElementKind::Vertex, None).unwrap();
        let n = rng.gen_bool(0.9).then(|| rng.gen_range(0..8));
        let w = rng.gen_bool(0.3).then(|| *["x", "y"].choose(rng).unwrap());
        if let Some(n) = n {
            store.set_attribute(v, "v", Value::Int(n)).unwrap();
        }
        if let Some(w) = w {
            store.set_attribute(v, "w", Value::text(w)).unwrap();
        }
        keys.insert(v, (n, w));
        ids.push(v);
    }
    let pick = |rng: &mut R| -> Vec<ElementId> {
        let k = rng.gen_range(0..=30.min(ids.len()));
        let mut m: Vec<ElementId> = ids.choose_multiple(rng, k).copied().collect();
        m.sort();
        m
    };
    let a_members = pick(rng);
    let b_members = pick(rng);
    let a = finite(&mut store, &a_members);
    let b = finite(&mut store, &b_members);
    Case {
        store,
        keys,
        a,
        b,
        a_members,
        b_members,
    }
}

/// Brute force over member lists in id order. By value, the first member
/// (lowest id, left operand first) represents each value class.
fn oracle(
    op: SetOp,
    mode: IdentityMode,
    a: &[ElementId],
    b: &[ElementId],
    keys: &BTreeMap<ElementId, Key>,
) -> BTreeSet<ElementId> {
    match mode {
        IdentityMode::ById => {
            let (a, b): (BTreeSet<_>, BTreeSet<_>) =
                (a.iter().copied().collect(), b.iter().copied().collect());
            match op {
                SetOp::Union => a.union(&b).copied().collect(),
                SetOp::Intersection => a.intersection(&b).copied().collect(),
                SetOp::Subtraction => a.difference(&b).copied().collect(),
            }
        }
        IdentityMode::ByValueEquality => {
            let in_b = |x: &ElementId| b.iter().any(|y| keys[y] == keys[x]);
            let mut seen = BTreeSet::new();
            let mut out = BTreeSet::new();
            for x in a {
                let keep = match op {
                    SetOp::Union => true,
                    SetOp::Intersection => in_b(x),
                    SetOp::Subtraction => !in_b(x),
                };
                if keep && seen.insert(keys[x]) {
                    out.insert(*x);
                }
            }
            if op == SetOp::Union {
                for y in b {
                    if seen.insert(keys[y]) {
                        out.insert(*y);
                    }
                }
            }
            out
        }
    }
}

fn forms(s: &Store, ids: &[ElementId]) -> Vec<String> {
    let mut f: Vec<String> = ids
        .iter()
        .map(|&x| s.canonical_form(x, EqualityMode::ByValue).unwrap())
        .collect();
    f.sort();
    f
}

pub fn run() -> Outcome {
    let mut rng = gen::rng(0x5eed_0002);
    let ops = [SetOp::Union, SetOp::Intersection, SetOp::Subtraction];
    let modes = [IdentityMode::ById, IdentityMode::ByValueEquality];
    let mut nonempty = 0;
    for n in 0..CASES {
        let mut c = case(&mut rng);
        let op = *ops.choose(&mut rng).unwrap();
        let mode = *modes.choose(&mut rng).unwrap();
        let (a, b) = (c.a, c.b);
        let s = &mut c.store;

        let d = s.set_operation(op, a, b, mode).map_err(|e| format!("case {n}: {e}"))?;
        let got = s.extension(d).unwrap();
        let got_set: BTreeSet<ElementId> = got.iter().copied().collect();
        ensure!(got_set.len() == got.len(), "case {n}: duplicate in extension");
        let want = oracle(op, mode, &c.a_members, &c.b_members, &c.keys);
        ensure!(
            got_set == want,
            "case {n}: {op:?} {mode:?} gave {got_set:?}, oracle {want:?}"
        );
        if !got.is_empty() {
            nonempty += 1;
        }

        // Idempotence.
        let ext_a = s.extension(a).unwrap();
        let dedup_a = oracle(SetOp::Union, mode, &c.a_members, &[], &c.keys);
        for idem in [SetOp::Union, SetOp::Intersection] {
            let d = s.set_operation(idem, a, a, mode).unwrap();
            let e: BTreeSet<ElementId> = s.extension(d).unwrap().into_iter().collect();
            ensure!(e == dedup_a, "case {n}: A {idem:?} A != A under {mode:?}");
        }
        if mode == IdentityMode::ById {
            ensure!(
                ext_a.iter().copied().collect::<BTreeSet<_>>() == dedup_a,
                "case {n}: extension of A differs from its members"
            );
        }
        // Commutativity of union and intersection.
        for comm in [SetOp::Union, SetOp::Intersection] {
            let ab = s.set_operation(comm, a, b, mode).unwrap();
            let ba = s.set_operation(comm, b, a, mode).unwrap();
            let (x, y) = (s.extension(ab).unwrap(), s.extension(ba).unwrap());
            let same = match mode {
                IdentityMode::ById => x == y,
                IdentityMode::ByValueEquality => forms(s, &x) == forms(s, &y),
            };
            ensure!(same, "case {n}: {comm:?} not commutative under {mode:?}");
        }
        // A \ A is empty.
        let aa = s.set_operation(SetOp::Subtraction, a, a, mode).unwrap();
        ensure!(s.extension(aa).unwrap().is_empty(), "case {n}: A \\ A not empty");
    }
    Ok(format!("{CASES} cases, {nonempty} with nonempty results, laws hold"))
}
