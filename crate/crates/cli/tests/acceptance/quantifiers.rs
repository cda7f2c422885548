use agx_core::logic::{Env, Evaluator};
use agx_core::logic::{CmpOp, ElemRef, Formula, Term};
use agx_core::{ElementKind, SetSpecArg, Store, TriBool, Value};
use rand::seq::SliceRandom;
use rand::Rng;

use super::gen::{self, cmp_holds, from_k, k_and, k_or, Body};
use crate::{ensure, Outcome};

const FINITE: usize = 10_000;
const COUNTABLE: usize = 2_000;
const HORIZON: u64 = 100;

fn finite_cases() -> Result<(usize, usize), String> {
    let mut rng = gen::rng(0x5eed_0003);
    let mut decided = 0;
    let mut unknown = 0;
    for n in 0..FINITE {
        let mut s = Store::new();
        let set = s.create_element(ElementKind::MetaVertex, None).unwrap();
        let size = rng.gen_range(0..=50);
        let mut values = Vec::new();
        for _ in 0..size {
            let v = s.create_element(ElementKind::Vertex, None).unwrap();
            // Missing attributes leave comparisons undecided.
            let val = rng.gen_bool(0.9).then(|| rng.gen_range(0..10));
            if let Some(x) = val {
                s.set_attribute(v, "n", Value::Int(x)).unwrap();
            }
            s.add_member(set, v).unwrap();
            values.push(val);
        }
        s.mark_set(set, SetSpecArg::Finite).unwrap();
        let body = Body::random(&mut rng, 3, 10);
        let verdicts: Vec<_> = values.iter().map(|v| body.eval(*v)).collect();
        let all = verdicts.iter().fold(Some(true), |a, v| k_and(a, *v));
        let any = verdicts.iter().fold(Some(false), |a, v| k_or(a, *v));

        let r = ElemRef::Id(set);
        let fa = Formula::forall("x", r.clone(), body.formula("x"));
        let ex = Formula::exists("x", r, body.formula("x"));
        let mut ev = Evaluator::new(&s);
        let got_all = ev.eval(&fa, &Env::new()).map_err(|e| format!("case {n}: {e}"))?;
        let got_any = ev.eval(&ex, &Env::new()).map_err(|e| format!("case {n}: {e}"))?;
        ensure!(got_all == from_k(all), "case {n}: FORALL gave {got_all:?}, oracle {all:?} ({body:?})");
        ensure!(got_any == from_k(any), "case {n}: EXISTS gave {got_any:?}, oracle {any:?} ({body:?})");
        if verdicts.iter().all(Option::is_some) {
            decided += 1;
            ensure!(
                got_all != TriBool::Unknown && got_any != TriBool::Unknown,
                "case {n}: Unknown although every body is decided"
            );
        }
        if got_all == TriBool::Unknown || got_any == TriBool::Unknown {
            unknown += 1;
        }
    }
    Ok((decided, unknown))
}

fn countable_cases() -> Result<usize, String> {
    let mut rng = gen::rng(0x5eed_0013);
    let generators: [(&str, fn(u64) -> i64); 3] = [
        ("naturals", |i| i as i64),
        ("evens", |i| 2 * i as i64),
        ("constant", |_| 0),
    ];
    let mut witnessed = 0;
    for n in 0..COUNTABLE {
        let (name, value) = *generators.choose(&mut rng).unwrap();
        let mut s = Store::new();
        let set = s.create_element(ElementKind::MetaVertex, None).unwrap();
        s.mark_set(set, SetSpecArg::Countable { generator: name.into() })
            .unwrap();
        let op = *CmpOp::ALL.choose(&mut rng).unwrap();
        let k = rng.gen_range(0..=250);
        let body = Formula::compare(Term::attr("x", "n"), op, Term::Literal(Value::Int(k)));

        // Direct scan of the generator below the horizon.
        let holds: Vec<bool> = (0..HORIZON).map(|i| cmp_holds(value(i), op, k)).collect();
        let want_any = if holds.iter().any(|h| *h) {
            TriBool::True
        } else {
            TriBool::Unknown
        };
        let want_all = if holds.iter().any(|h| !*h) {
            TriBool::False
        } else {
            TriBool::Unknown
        };

        let r = ElemRef::Id(set);
        let mut ev = Evaluator::new(&s).with_horizon(HORIZON);
        let got_any = ev
            .eval(&Formula::exists("x", r.clone(), body.clone()), &Env::new())
            .map_err(|e| format!("countable case {n}: {e}"))?;
        let got_all = ev
            .eval(&Formula::forall("x", r, body), &Env::new())
            .map_err(|e| format!("countable case {n}: {e}"))?;
        ensure!(
            got_any == want_any,
            "countable case {n}: EXISTS x in {name}: x.n {} {k} gave {got_any:?}, scan {want_any:?}",
            op.symbol()
        );
        ensure!(
            got_all == want_all,
            "countable case {n}: FORALL x in {name}: x.n {} {k} gave {got_all:?}, scan {want_all:?}",
            op.symbol()
        );
        if want_any == TriBool::True {
            witnessed += 1;
        }
    }
    Ok(witnessed)
}

pub fn run() -> Outcome {
    let (decided, unknown) = finite_cases()?;
    let witnessed = countable_cases()?;
    Ok(format!(
        "{FINITE} finite cases ({decided} fully decided, {unknown} with an Unknown verdict), \
         {COUNTABLE} countable cases at H={HORIZON} ({witnessed} with a witness)"
    ))
}
