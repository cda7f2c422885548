use agx_core::{ElementId, ElementKind, EqualityMode, Store, Value};
use rand::seq::SliceRandom;
use rand::Rng;

use super::gen::{self, R};
use crate::{ensure, Outcome};

const PLANS: usize = 500;
const PAIRS_PER_PLAN: usize = 20;

/// A store described by element positions, so it can be built in any order.
struct Plan {
    nodes: Vec<ElementKind>,
    /// (from, to, directed), over node positions.
    links: Vec<(Vec<usize>, Vec<usize>, bool)>,
    /// (container, member) with member < container, so containment is acyclic.
    members: Vec<(usize, usize)>,
    /// (owner, name, value) over node positions then link positions.
    attrs: Vec<(usize, &'static str, PlanValue)>,
}

#[derive(Clone, Copy)]
enum PlanValue {
    Int(i64),
    Text(&'static str),
    Ref(usize),
}

impl Plan {
    fn random(rng: &mut R) -> Plan {
        let n = rng.gen_range(6..=16);
        let nodes: Vec<ElementKind> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    ElementKind::MetaVertex
                } else {
                    ElementKind::Vertex
                }
            })
            .collect();
        let links = (0..rng.gen_range(0..5))
            .map(|_| {
                let f = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..n)).collect();
                let t = (0..rng.gen_range(1..=2)).map(|_| rng.gen_range(0..n)).collect();
                (f, t, rng.gen())
            })
            .collect::<Vec<_>>();
        let mut members = Vec::new();
        for c in 0..n {
            if nodes[c] == ElementKind::MetaVertex && c > 0 {
                for _ in 0..rng.gen_range(0..=3) {
                    let m = rng.gen_range(0..c);
                    if !members.contains(&(c, m)) {
                        members.push((c, m));
                    }
                }
            }
        }
        let owners = n + links.len();
        let mut attrs: Vec<(usize, &'static str, PlanValue)> = Vec::new();
        for _ in 0..rng.gen_range(0..2 * n) {
            let owner = rng.gen_range(0..owners);
            let name = *["a", "b"].choose(rng).unwrap();
            if attrs.iter().any(|(o, nm, _)| *o == owner && *nm == name) {
                continue;
            }
            let value = match rng.gen_range(0..5) {
                0..=2 => PlanValue::Int(rng.gen_range(0..2)),
                3 => PlanValue::Text("x"),
                _ => PlanValue::Ref(rng.gen_range(0..n)),
            };
            attrs.push((owner, name, value));
        }
        Plan {
            nodes,
            links,
            members,
            attrs,
        }
    }

    /// Builds the plan, creating each group of elements in a shuffled order
    /// when `rng` is given. Returns ids by position.
    fn build(&self, mut rng: Option<&mut R>) -> (Store, Vec<ElementId>) {
        let order = |len: usize, rng: &mut Option<&mut R>| -> Vec<usize> {
            let mut o: Vec<usize> = (0..len).collect();
            if let Some(r) = rng.as_deref_mut() {
                o.shuffle(r);
            }
            o
        };
        let mut s = Store::new();
        // Burn a few ids so positions and ids drift apart.
        let burn = rng.as_deref_mut().map_or(0, |r| r.gen_range(1..20));
        for _ in 0..burn {
            s.create_element(ElementKind::Vertex, None).unwrap();
        }
        let mut ids = vec![None; self.nodes.len() + self.links.len()];
        for i in order(self.nodes.len(), &mut rng) {
            ids[i] = Some(s.create_element(self.nodes[i], None).unwrap());
        }
        let node = |ids: &[Option<ElementId>], i: usize| ids[i].unwrap();
        for j in order(self.links.len(), &mut rng) {
            let (f, t, d) = &self.links[j];
            let f: Vec<ElementId> = f.iter().map(|&i| node(&ids, i)).collect();
            let t: Vec<ElementId> = t.iter().map(|&i| node(&ids, i)).collect();
            ids[self.nodes.len() + j] = Some(s.create_link(ElementKind::Edge, &f, &t, *d).unwrap());
        }
        for k in order(self.members.len(), &mut rng) {
            let (c, m) = self.members[k];
            s.add_member(node(&ids, c), node(&ids, m)).unwrap();
        }
        for k in order(self.attrs.len(), &mut rng) {
            let (o, name, v) = self.attrs[k];
            let v = match v {
                PlanValue::Int(i) => Value::Int(i),
                PlanValue::Text(t) => Value::text(t),
                PlanValue::Ref(i) => Value::Ref(node(&ids, i)),
            };
            s.set_attribute(node(&ids, o), name, v).unwrap();
        }
        (s, ids.into_iter().map(Option::unwrap).collect())
    }
}

pub fn run() -> Outcome {
    let mut rng = gen::rng(0x5eed_0006);
    let modes = [EqualityMode::Structural, EqualityMode::ByValue];
    let (mut structural, mut by_value) = (0, 0);
    for p in 0..PLANS {
        let plan = Plan::random(&mut rng);
        let (s, ids) = plan.build(None);
        let (t, renamed) = plan.build(Some(&mut rng));
        let eq = |st: &Store, a: ElementId, b: ElementId, m: EqualityMode| st.equals(a, b, m).unwrap();
        for _ in 0..PAIRS_PER_PLAN {
            let (i, j) = (rng.gen_range(0..ids.len()), rng.gen_range(0..ids.len()));
            let (a, b) = (ids[i], ids[j]);
            let bv = eq(&s, a, b, EqualityMode::ByValue);
            let st = eq(&s, a, b, EqualityMode::Structural);
            ensure!(!bv || st, "plan {p}: {i} and {j} equal by value but not structurally");
            for m in modes {
                ensure!(eq(&s, a, a, m), "plan {p}: {i} not {m:?}-equal to itself");
                ensure!(eq(&s, a, b, m) == eq(&s, b, a, m), "plan {p}: {m:?} not symmetric on {i}, {j}");
                ensure!(
                    eq(&s, a, b, m) == eq(&t, renamed[i], renamed[j], m),
                    "plan {p}: {m:?} verdict on {i}, {j} changed under renaming"
                );
            }
            structural += st as usize;
            by_value += bv as usize;
        }
    }
    let pairs = PLANS * PAIRS_PER_PLAN;
    Ok(format!(
        "{pairs} pairs ({structural} structurally equal, {by_value} equal by value), renaming-invariant"
    ))
}
