use std::collections::BTreeSet;

use agx_core::profile::{decode_simple_graph, encode_simple_graph, ViolationKind};
use agx_core::{ElementKind, ValidationProfile};
use rand::seq::SliceRandom;
use rand::Rng;

use super::gen;
use crate::{ensure, Outcome};

const GRAPHS: usize = 1000;

pub fn run() -> Outcome {
    let mut rng = gen::rng(0x5eed_0007);
    let mut edges_total = 0;
    let mut injected = 0;
    let mut flagged = 0;
    for g in 0..GRAPHS {
        let n = rng.gen_range(1..=20);
        let density = rng.gen_range(0.0..=1.0);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(density) {
                    edges.push(if rng.gen() { (a, b) } else { (b, a) });
                }
            }
        }
        edges.shuffle(&mut rng);
        edges_total += edges.len();
        let want: BTreeSet<(usize, usize)> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();

        let (mut store, vs) = encode_simple_graph(n, &edges);
        let decoded = decode_simple_graph(&store).map_err(|e| format!("graph {g}: {e}"))?;
        let index = |id| vs.iter().position(|&v| v == id).expect("decoded vertex is one of ours");
        let got: BTreeSet<(usize, usize)> = decoded
            .iter()
            .map(|&(a, b)| {
                let (i, j) = (index(a), index(b));
                (i.min(j), i.max(j))
            })
            .collect();
        ensure!(got == want, "graph {g}: decoded {got:?}, encoded {want:?}");
        ensure!(decoded.len() == edges.len(), "graph {g}: edge count changed");
        let clean = store.validate(ValidationProfile::OrdinaryGraph);
        ensure!(clean.is_conforming(), "graph {g}: encoding rejected: {clean}");

        // Inject adjacencies between two vertices or two edge elements.
        let edge_elems: Vec<_> = store
            .nodes()
            .filter(|e| e.kind() == ElementKind::Edge)
            .map(|e| e.id())
            .collect();
        let mut planted = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let pool = if edge_elems.len() >= 2 && rng.gen() { &edge_elems } else { &vs };
            if pool.len() < 2 {
                continue;
            }
            let pair: Vec<_> = pool.choose_multiple(&mut rng, 2).copied().collect();
            store.set_adjacent(pair[0], pair[1]).unwrap();
            planted.push((pair[0], pair[1]));
        }
        let report = store.validate(ValidationProfile::OrdinaryGraph);
        for (a, b) in planted {
            injected += 1;
            let hit = report.violations.iter().any(|v| match v.kind {
                ViolationKind::SameKindAdjacency { a: x, b: y, .. } => {
                    (x, y) == (a, b) || (x, y) == (b, a)
                }
                _ => false,
            });
            ensure!(hit, "graph {g}: same-kind adjacency {a} ~ {b} not flagged");
            flagged += 1;
        }
        ensure!(
            report
                .violations
                .iter()
                .all(|v| matches!(v.kind, ViolationKind::SameKindAdjacency { .. })),
            "graph {g}: unexpected violation: {report}"
        );
    }
    Ok(format!(
        "{GRAPHS} graphs, {edges_total} edges decoded exactly; {flagged}/{injected} injected adjacencies flagged"
    ))
}
