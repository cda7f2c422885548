use agx_core::logic::{Env, Evaluator};
use agx_core::logic::{CmpOp, ElemRef, Formula, Subject, Term};
use agx_core::{ElementKind, SetSpecArg, Store, TriBool, Value};
use rand::seq::SliceRandom;
use rand::Rng;

use super::gen::{self, cmp_holds, from_k, k_and, k_not, k_or, Body, K, R};
use crate::{ensure, Outcome};

const FORMULAS: usize = 10_000;

/// Attribute values of the elements `e0..e3`; `None` means absent.
const ELEMS: [Option<i64>; 4] = [Some(3), None, Some(-1), Some(7)];

fn ground(rng: &mut R, depth: usize) -> (Formula, K) {
    if depth == 0 || rng.gen_bool(0.35) {
        return match rng.gen_range(0..3) {
            0 => {
                let k = *[Some(true), Some(false), None].choose(rng).unwrap();
                (Formula::Truth(from_k(k)), k)
            }
            1 => {
                let (a, b) = (rng.gen_range(-3..4), rng.gen_range(-3..4));
                let op = *CmpOp::ALL.choose(rng).unwrap();
                let f = Formula::compare(Term::Literal(Value::Int(a)), op, Term::Literal(Value::Int(b)));
                (f, Some(cmp_holds(a, op, b)))
            }
            _ => {
                let i = rng.gen_range(0..ELEMS.len());
                let b = rng.gen_range(-3..8);
                let op = *CmpOp::ALL.choose(rng).unwrap();
                let lhs = Term::Attr {
                    subject: Subject::Elem(ElemRef::Token(format!("e{i}"))),
                    name: "n".into(),
                };
                let f = Formula::compare(lhs, op, Term::Literal(Value::Int(b)));
                (f, ELEMS[i].map(|a| cmp_holds(a, op, b)))
            }
        };
    }
    match rng.gen_range(0..3) {
        0 => {
            let (f, k) = ground(rng, depth - 1);
            (Formula::not(f), k_not(k))
        }
        c => {
            let parts: Vec<(Formula, K)> = (0..rng.gen_range(2..=3)).map(|_| ground(rng, depth - 1)).collect();
            let fs = parts.iter().map(|p| p.0.clone()).collect();
            if c == 1 {
                let k = parts.iter().fold(Some(true), |a, p| k_and(a, p.1));
                (Formula::And(fs), k)
            } else {
                let k = parts.iter().fold(Some(false), |a, p| k_or(a, p.1));
                (Formula::Or(fs), k)
            }
        }
    }
}

fn and(a: &Formula, b: &Formula) -> Formula {
    Formula::And(vec![a.clone(), b.clone()])
}

fn or(a: &Formula, b: &Formula) -> Formula {
    Formula::Or(vec![a.clone(), b.clone()])
}

fn not(a: &Formula) -> Formula {
    Formula::not(a.clone())
}

pub fn run() -> Outcome {
    let mut s = Store::new();
    for (i, v) in ELEMS.iter().enumerate() {
        let e = s.create_element(ElementKind::Vertex, Some(&format!("e{i}"))).unwrap();
        if let Some(v) = v {
            s.set_attribute(e, "n", Value::Int(*v)).unwrap();
        }
    }
    let set = s.create_element(ElementKind::MetaVertex, Some("S")).unwrap();
    for i in [0, 1, 3] {
        let e = s.lookup(&format!("e{i}")).unwrap();
        s.add_member(set, e).unwrap();
    }
    s.mark_set(set, SetSpecArg::Finite).unwrap();
    let empty = s.create_element(ElementKind::MetaVertex, Some("E")).unwrap();
    s.mark_set(empty, SetSpecArg::Finite).unwrap();

    let mut rng = gen::rng(0x5eed_0004);
    let mut ev = Evaluator::new(&s);
    let env = Env::new();
    let mut eval = |f: &Formula| -> Result<TriBool, String> { ev.eval(f, &env).map_err(|e| e.to_string()) };
    let mut unknowns = 0;
    for n in 0..FORMULAS {
        let (f, kf) = ground(&mut rng, 4);
        let (g, _) = ground(&mut rng, 3);
        let (h, _) = ground(&mut rng, 3);
        let vf = eval(&f)?;
        ensure!(vf == from_k(kf), "formula {n}: eval {vf:?}, truth table {kf:?}: {f:?}");
        if vf == TriBool::Unknown {
            unknowns += 1;
        }
        let laws: [(&str, Formula, Formula); 8] = [
            ("De Morgan (and)", not(&and(&f, &g)), or(&not(&f), &not(&g))),
            ("De Morgan (or)", not(&or(&f, &g)), and(&not(&f), &not(&g))),
            ("double negation", not(&not(&f)), f.clone()),
            ("and commutes", and(&f, &g), and(&g, &f)),
            ("or commutes", or(&f, &g), or(&g, &f)),
            ("and associates", and(&and(&f, &g), &h), and(&f, &and(&g, &h))),
            ("or associates", or(&or(&f, &g), &h), or(&f, &or(&g, &h))),
            (
                "flat and nested conjunction agree",
                Formula::And(vec![f.clone(), g.clone(), h.clone()]),
                and(&f, &and(&g, &h)),
            ),
        ];
        for (law, lhs, rhs) in &laws {
            let (l, r) = (eval(lhs)?, eval(rhs)?);
            ensure!(l == r, "formula {n}: {law} fails ({l:?} vs {r:?})");
        }

        // Quantifier duality over a finite set and the empty set.
        let body = Body::random(&mut rng, 2, 8);
        for target in ["S", "E"] {
            let r = ElemRef::Token(target.into());
            let phi = body.formula("x");
            let pairs = [
                (
                    Formula::forall("x", r.clone(), phi.clone()),
                    not(&Formula::exists("x", r.clone(), not(&phi))),
                ),
                (
                    Formula::exists("x", r.clone(), phi.clone()),
                    not(&Formula::forall("x", r.clone(), not(&phi))),
                ),
            ];
            for (l, rr) in &pairs {
                let (a, b) = (eval(l)?, eval(rr)?);
                ensure!(a == b, "formula {n}: quantifier duality fails over {target}: {a:?} vs {b:?}");
            }
        }
    }
    Ok(format!("{FORMULAS} formulas ({unknowns} evaluating to Unknown), 8 propositional laws plus quantifier duality over a set and the empty set each"))
}
