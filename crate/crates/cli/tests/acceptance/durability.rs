use agx_core::persist::{
    encode_entry, export_text, load_snapshot, replay, replay_onto, save_snapshot, LogEntry,
    PersistError,
};
use agx_core::{ql, ElementId, ElementKind, IdentityMode, KnowledgeFragment, Op, SetOp, SetSpecArg, Store};
use rand::seq::SliceRandom;
use rand::Rng;

use super::gen::{self, random_value, R};
use crate::{ensure, Outcome};

const SEQUENCES: usize = 500;
const CORRUPTIONS: usize = 100;

/// A random op over the current elements; it may be rejected by the store.
fn random_op(rng: &mut R, s: &Store) -> Op {
    let ids: Vec<ElementId> = s.nodes().map(|e| e.id()).collect();
    let containers: Vec<ElementId> = s
        .nodes()
        .filter(|e| e.kind().is_container())
        .map(|e| e.id())
        .collect();
    let any = |rng: &mut R| *ids.choose(rng).unwrap();
    if ids.len() < 3 {
        return Op::CreateElement {
            kind: ElementKind::Vertex,
            token: None,
        };
    }
    match rng.gen_range(0..14) {
        0 | 1 => Op::CreateElement {
            kind: *[ElementKind::Vertex, ElementKind::MetaVertex].choose(rng).unwrap(),
            token: rng.gen_bool(0.2).then(|| format!("t{}", rng.gen::<u16>())),
        },
        2..=4 => Op::SetAttribute {
            owner: any(rng),
            name: ["a", "b", "c.d"].choose(rng).unwrap().to_string(),
            value: random_value(rng, &ids),
        },
        5 if !containers.is_empty() => Op::AddMember {
            container: *containers.choose(rng).unwrap(),
            member: any(rng),
        },
        6 => Op::CreateLink {
            kind: ElementKind::Edge,
            from: vec![any(rng)],
            to: (0..rng.gen_range(1..=2)).map(|_| any(rng)).collect(),
            directed: rng.gen(),
            token: None,
        },
        7 => Op::SetAdjacent {
            a: any(rng),
            b: any(rng),
        },
        8 if rng.gen_bool(0.3) => Op::DeleteElement { id: any(rng) },
        9 if !containers.is_empty() => Op::MarkSet {
            container: *containers.choose(rng).unwrap(),
            spec: match rng.gen_range(0..3) {
                0 => SetSpecArg::Finite,
                1 => SetSpecArg::AdjacencyGroup,
                _ => SetSpecArg::Countable {
                    generator: ["naturals", "evens"].choose(rng).unwrap().to_string(),
                },
            },
        },
        10 if containers.len() >= 2 => Op::SetOperation {
            op: *[SetOp::Union, SetOp::Intersection, SetOp::Subtraction].choose(rng).unwrap(),
            left: *containers.choose(rng).unwrap(),
            right: *containers.choose(rng).unwrap(),
            identity: *[IdentityMode::ById, IdentityMode::ByValueEquality].choose(rng).unwrap(),
        },
        11 if !containers.is_empty() => Op::Materialize {
            container: *containers.choose(rng).unwrap(),
            index: rng.gen_range(0..5),
        },
        12 => Op::AttachFragment {
            owner: any(rng),
            fragment: KnowledgeFragment::new("text", "text/plain", format!("note {}", rng.gen::<u8>())),
        },
        _ => Op::RegisterRule {
            rule: ql::parse_rule(&format!(
                "r{} FROM (x:vertex {{a}}) SET x.b := 1",
                rng.gen_range(0..3)
            ))
            .unwrap(),
        },
    }
}

/// Applies random ops to a fresh store and returns it with the ops that
/// were accepted, in order. Ops leaving a dangling reference are dropped,
/// since only conforming stores export.
fn sequence(rng: &mut R) -> (Store, Vec<Op>) {
    let mut s = Store::new();
    let mut ops = Vec::new();
    let len = rng.gen_range(1..=120);
    for _ in 0..len {
        let op = random_op(rng, &s);
        let mut next = s.clone();
        if next.apply(op.clone()).is_ok() && next.validate(next.profile()).is_conforming() {
            s = next;
            ops.push(op);
        }
    }
    (s, ops)
}

fn frames(ops: &[Op]) -> Vec<Vec<u8>> {
    ops.iter()
        .enumerate()
        .map(|(i, op)| {
            encode_entry(&LogEntry {
                seq: i as u64 + 1,
                op: op.clone(),
            })
        })
        .collect()
}

fn ids(s: &Store) -> Vec<ElementId> {
    s.elements().map(|e| e.id()).collect()
}

fn same(a: &Store, b: &Store) -> Result<bool, String> {
    let ea = export_text(a).map_err(|e| e.to_string())?;
    let eb = export_text(b).map_err(|e| e.to_string())?;
    Ok(ea == eb && ids(a) == ids(b))
}

pub fn run() -> Outcome {
    let mut rng = gen::rng(0x5eed_0011);
    let mut ops_total = 0;
    let mut detected = 0;
    for n in 0..SEQUENCES {
        let (live, ops) = sequence(&mut rng);
        ops_total += ops.len();
        let framed = frames(&ops);
        let log: Vec<u8> = framed.concat();

        let full = replay(&log);
        ensure!(full.error.is_none(), "sequence {n}: replay failed: {:?}", full.error);
        ensure!(full.last_seq == ops.len() as u64, "sequence {n}: replay stopped at {}", full.last_seq);
        ensure!(same(&full.store, &live)?, "sequence {n}: replay differs from the live store");

        let k = rng.gen_range(0..=ops.len());
        let prefix = replay(&framed[..k].concat());
        let mut snap = Vec::new();
        save_snapshot(&prefix.store, k as u64, &mut snap).map_err(|e| format!("sequence {n}: {e}"))?;
        let loaded = load_snapshot(&snap).map_err(|e| format!("sequence {n}: {e}"))?;
        let resumed = replay_onto(loaded.store, loaded.seq, &log);
        ensure!(resumed.error.is_none(), "sequence {n}: suffix replay failed: {:?}", resumed.error);
        ensure!(
            same(&resumed.store, &full.store)?,
            "sequence {n}: snapshot at {k} plus suffix differs from full replay"
        );

        if n < CORRUPTIONS {
            let j = rng.gen_range(0..framed.len());
            let start: usize = framed[..j].iter().map(Vec::len).sum();
            let at = start + rng.gen_range(0..framed[j].len());
            let mut bad = log.clone();
            bad[at] ^= rng.gen_range(1..=255u8);
            let r = replay(&bad);
            let entry = j as u64 + 1;
            let at_entry = match &r.error {
                Some(PersistError::ChecksumMismatch(k)) => *k == entry,
                Some(PersistError::MalformedEntry { seq, .. }) => *seq == entry,
                _ => false,
            };
            ensure!(
                at_entry && r.last_seq == entry - 1,
                "sequence {n}: flipped byte {at} in entry {entry}, got {:?} after entry {}",
                r.error,
                r.last_seq
            );
            detected += 1;
        }
    }
    Ok(format!(
        "{SEQUENCES} sequences ({ops_total} ops) replay exactly, snapshots resume exactly; \
         {detected}/{CORRUPTIONS} corruptions detected at the corrupted entry"
    ))
}
