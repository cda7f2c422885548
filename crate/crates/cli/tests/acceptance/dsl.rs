use agx_core::logic::{
    CmpOp, ElemRef, FnTarget, Formula, InferenceRule, Modality, PredName, SourcePattern, Subject,
    Term,
};
use agx_core::ql::{self, *};
use agx_core::{ElementId, ElementKind, EqualityMode, IdentityMode, SetOp, TriBool, Value};
use rand::seq::SliceRandom;
use rand::Rng;

use super::gen::{self, random_value, R};
use crate::{ensure, Outcome};

const QUERIES: usize = 10_000;

const VARS: [&str; 6] = ["x", "y", "w_1", "node-a", "z9", "_v"];
const NAMES: [&str; 5] = ["add", "f", "is_hot", "rule-1", "p2"];
const TOKENS: [&str; 5] = ["s", "frame", "agent_7", "e-1", "Top"];
const ATTRS: [&str; 10] = [
    "a", "w.x", "t-1", "_k", "x.y.z", "AND", "with space", "", "1st", "ünï",
];

fn pick(rng: &mut R, xs: &[&str]) -> String {
    xs.choose(rng).unwrap().to_string()
}

fn span() -> Span {
    Span::default()
}

fn elem_ref(rng: &mut R) -> ElemRef {
    if rng.gen_bool(0.7) {
        ElemRef::Token(pick(rng, &TOKENS))
    } else {
        ElemRef::Id(ElementId(rng.gen::<u128>() >> rng.gen_range(0..128)))
    }
}

fn subject(rng: &mut R) -> Subject {
    if rng.gen() {
        Subject::Var(pick(rng, &VARS))
    } else {
        Subject::Elem(elem_ref(rng))
    }
}

fn literal(rng: &mut R) -> Value {
    if rng.gen_bool(0.1) {
        return Value::Predicate(pick(rng, &NAMES));
    }
    let targets = [ElementId(1), ElementId(u128::MAX), ElementId(0xabc)];
    random_value(rng, &targets)
}

fn term(rng: &mut R, depth: u32) -> Term {
    let top = if depth == 0 { 4 } else { 6 };
    match rng.gen_range(0..top) {
        // A reference literal reads back as the element it names.
        0 => match literal(rng) {
            Value::Ref(id) => Term::Elem(ElemRef::Id(id)),
            v => Term::Literal(v),
        },
        1 => Term::Attr {
            subject: subject(rng),
            name: pick(rng, &ATTRS),
        },
        2 => Term::Var(pick(rng, &VARS)),
        3 => Term::Elem(elem_ref(rng)),
        n => Term::Apply {
            target: if n == 4 {
                FnTarget::Named(pick(rng, &NAMES))
            } else {
                FnTarget::Node(elem_ref(rng))
            },
            args: (0..rng.gen_range(0..=3)).map(|_| term(rng, depth - 1)).collect(),
        },
    }
}

fn modality(rng: &mut R, depth: u32) -> Modality {
    match rng.gen_range(0..13) {
        0 => Modality::Necessary,
        1 => Modality::Possible,
        2 => Modality::Known { agent: elem_ref(rng) },
        3 => Modality::Believed { agent: elem_ref(rng) },
        4 => Modality::Obligatory,
        5 => Modality::Permitted,
        6 => Modality::Forbidden,
        7 => Modality::Good,
        8 => Modality::Bad,
        9 => Modality::Always,
        10 => Modality::Eventually,
        11 => Modality::Next,
        _ => Modality::Until {
            goal: Box::new(formula(rng, depth)),
        },
    }
}

fn formula(rng: &mut R, depth: u32) -> Formula {
    let top = if depth == 0 { 5 } else { 11 };
    let d = depth.saturating_sub(1);
    match rng.gen_range(0..top) {
        0 => Formula::Truth(*[TriBool::True, TriBool::False, TriBool::Unknown].choose(rng).unwrap()),
        1 | 2 => Formula::Compare {
            lhs: term(rng, 1),
            op: *CmpOp::ALL.choose(rng).unwrap(),
            rhs: term(rng, 1),
        },
        3 => Formula::Predicate {
            name: if rng.gen() {
                PredName::Named(pick(rng, &NAMES))
            } else {
                PredName::Attr {
                    subject: subject(rng),
                    attr: pick(rng, &ATTRS),
                }
            },
            args: (0..rng.gen_range(0..=3)).map(|_| term(rng, 1)).collect(),
        },
        4 => Formula::EqualsElem {
            a: subject(rng),
            b: subject(rng),
            mode: *[EqualityMode::Structural, EqualityMode::ByValue].choose(rng).unwrap(),
        },
        5 => Formula::Not(Box::new(formula(rng, d))),
        6 => Formula::And((0..rng.gen_range(2..=3)).map(|_| formula(rng, d)).collect()),
        7 => Formula::Or((0..rng.gen_range(2..=3)).map(|_| formula(rng, d)).collect()),
        8 => Formula::ForAll {
            var: pick(rng, &VARS),
            set: elem_ref(rng),
            body: Box::new(formula(rng, d)),
        },
        9 => Formula::Exists {
            var: pick(rng, &VARS),
            set: elem_ref(rng),
            body: Box::new(formula(rng, d)),
        },
        _ => Formula::Modal {
            op: modality(rng, d),
            var: pick(rng, &VARS),
            frame: elem_ref(rng),
            body: Box::new(formula(rng, d)),
        },
    }
}

fn node_kind(rng: &mut R) -> Option<ElementKind> {
    let kinds = [
        ElementKind::Vertex,
        ElementKind::Edge,
        ElementKind::MetaVertex,
        ElementKind::MetaEdge,
        ElementKind::Function,
    ];
    rng.gen_bool(0.7).then(|| *kinds.choose(rng).unwrap())
}

fn rule(rng: &mut R) -> InferenceRule {
    let sources = (0..rng.gen_range(1..=3))
        .map(|_| SourcePattern {
            var: pick(rng, &VARS),
            kind: node_kind(rng),
            required_attrs: (0..rng.gen_range(0..=2)).map(|_| pick(rng, &ATTRS)).collect(),
            guard: if rng.gen() {
                formula(rng, 2)
            } else {
                Formula::Truth(TriBool::True)
            },
        })
        .collect();
    InferenceRule {
        name: pick(rng, &NAMES),
        sources,
        target_var: pick(rng, &VARS),
        target_attr: pick(rng, &ATTRS),
        value: term(rng, 2),
    }
}

fn refs(rng: &mut R, min: usize) -> Vec<ElemRef> {
    (0..rng.gen_range(min..=3)).map(|_| elem_ref(rng)).collect()
}

fn attr_list(rng: &mut R) -> Vec<(String, Term)> {
    (0..rng.gen_range(0..=3)).map(|_| (pick(rng, &ATTRS), term(rng, 1))).collect()
}

fn set_expr(rng: &mut R, depth: u32) -> SetExpr {
    if depth == 0 || rng.gen_bool(0.3) {
        return SetExpr::Ref(elem_ref(rng));
    }
    SetExpr::Op {
        op: *[SetOp::Union, SetOp::Intersection, SetOp::Subtraction].choose(rng).unwrap(),
        left: Box::new(set_expr(rng, depth - 1)),
        right: Box::new(set_expr(rng, depth - 1)),
    }
}

fn define(rng: &mut R) -> DefineItem {
    match rng.gen_range(0..10) {
        0 => DefineItem::Element {
            kind: ElementKind::Vertex,
            token: pick(rng, &TOKENS),
            attrs: attr_list(rng),
            members: Vec::new(),
        },
        1 => DefineItem::Element {
            kind: ElementKind::MetaVertex,
            token: pick(rng, &TOKENS),
            attrs: attr_list(rng),
            members: refs(rng, 0),
        },
        2 => DefineItem::Function {
            token: pick(rng, &TOKENS),
            function: pick(rng, &NAMES),
        },
        3 => {
            let kind = *[ElementKind::Edge, ElementKind::MetaEdge].choose(rng).unwrap();
            DefineItem::Link {
                kind,
                token: rng.gen::<bool>().then(|| pick(rng, &TOKENS)),
                from: refs(rng, 1),
                to: refs(rng, 1),
                directed: rng.gen(),
                attrs: attr_list(rng),
                members: if kind == ElementKind::MetaEdge { refs(rng, 0) } else { Vec::new() },
            }
        }
        4 => DefineItem::Member {
            container: elem_ref(rng),
            members: refs(rng, 1),
        },
        5 => DefineItem::Adjacent {
            a: elem_ref(rng),
            b: elem_ref(rng),
        },
        6 => DefineItem::Attr {
            owner: elem_ref(rng),
            name: pick(rng, &ATTRS),
            value: term(rng, 2),
        },
        7 => DefineItem::Set {
            container: elem_ref(rng),
            kind: match rng.gen_range(0..3) {
                0 => SetKind::Finite,
                1 => SetKind::Group,
                _ => SetKind::Countable(pick(rng, &["naturals", "evens", "constant"])),
            },
        },
        8 => DefineItem::Predicate {
            name: pick(rng, &NAMES),
            params: (0..rng.gen_range(0..=3)).map(|_| pick(rng, &VARS)).collect(),
            body: formula(rng, 3),
        },
        _ => DefineItem::Rule(rule(rng)),
    }
}

fn query(rng: &mut R) -> Query {
    match rng.gen_range(0..5) {
        0 => Query::Match(MatchQuery {
            var: pick(rng, &VARS),
            kind: node_kind(rng),
            constraints: (0..rng.gen_range(0..=3))
                .map(|_| AttrConstraint {
                    name: pick(rng, &ATTRS),
                    value: rng.gen::<bool>().then(|| literal(rng)),
                })
                .collect(),
            filter: rng.gen::<bool>().then(|| formula(rng, 3)),
            returns: (0..rng.gen_range(1..=3)).map(|_| term(rng, 1)).collect(),
            span: span(),
        }),
        1 => Query::Eval(EvalQuery {
            formula: formula(rng, 4),
            horizon: rng.gen::<bool>().then(|| rng.gen_range(1..=10_000)),
            span: span(),
        }),
        2 => Query::Infer(InferQuery {
            target: if rng.gen_bool(0.3) {
                InferTarget::All
            } else {
                InferTarget::Items(
                    (0..rng.gen_range(1..=3))
                        .map(|_| {
                            if rng.gen() {
                                InferItem::Named(pick(rng, &NAMES))
                            } else {
                                InferItem::Inline(rule(rng))
                            }
                        })
                        .collect(),
                )
            },
            max_iter: rng.gen::<bool>().then(|| rng.gen_range(1..=1000)),
            span: span(),
        }),
        3 => Query::Set(SetQuery {
            target: pick(rng, &TOKENS),
            expr: set_expr(rng, 3),
            identity: *[IdentityMode::ById, IdentityMode::ByValueEquality].choose(rng).unwrap(),
            span: span(),
        }),
        _ => Query::Define(Define {
            item: define(rng),
            span: span(),
        }),
    }
}

const MALFORMED: [&str; 30] = [
    "",
    ";",
    "MATCH",
    "MATCH (x",
    "MATCH (x:widget) RETURN x;",
    "MATCH (x) RETURN ;",
    "MATCH (x) WHERE RETURN x;",
    "EVAL",
    "EVAL x.a = ;",
    "EVAL x.a == 1;",
    "EVAL (TRUE AND FALSE;",
    "EVAL FORALL x @s : TRUE;",
    "EVAL TRUE HORIZON 0;",
    "EVAL TRUE HORIZON -3;",
    "EVAL \"unterminated;",
    "EVAL KNOWN x IN @f : TRUE;",
    "EVAL UNTIL x IN @f : (TRUE);",
    "EVAL x.a = TIME \"yesterday\";",
    "EVAL x.a = BYTES \"***\";",
    "INFER;",
    "INFER ALL MAXITER;",
    "SET s = UNION(@a, @b);",
    "SET @s = UNION(@a);",
    "SET @s = XOR(@a, @b);",
    "DEFINE VERTEX;",
    "DEFINE EDGE FROM @a TO @b;",
    "DEFINE SET @s INFINITE;",
    "DEFINE PREDICATE p(x AS TRUE;",
    "RULE r FROM (x) SET x.a = 1;",
    "EVAL TRUE;\nEVAL\n  x.a = 1 $;",
];

fn check_malformed(src: &str) -> Result<(), String> {
    let err = match ql::parse(src) {
        Ok(q) => return Err(format!("{src:?} parsed as {q}")),
        Err(e) => e,
    };
    ensure!(err.offset <= src.len(), "{src:?}: offset {} past the end", err.offset);
    ensure!(src.is_char_boundary(err.offset), "{src:?}: offset {} splits a char", err.offset);
    let before = &src[..err.offset];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().unwrap_or("").chars().count() + 1;
    ensure!(
        (err.line, err.col) == (line, col),
        "{src:?}: reported {}:{} for offset {}",
        err.line,
        err.col,
        err.offset
    );
    Ok(())
}

pub fn run() -> Outcome {
    let mut rng = gen::rng(0x5eed_0010);
    let mut bytes = 0;
    for n in 0..QUERIES {
        let q = query(&mut rng);
        let text = q.to_string();
        bytes += text.len();
        match ql::parse(&text) {
            Ok(back) => ensure!(back == q, "query {n}: {text}\n reparsed as {back}\n {back:?}\n vs {q:?}"),
            Err(e) => return Err(format!("query {n}: {text}\n does not parse: {e}")),
        }
    }
    for src in MALFORMED {
        check_malformed(src)?;
    }
    Ok(format!(
        "{QUERIES} queries ({bytes} bytes) round-trip; {} malformed inputs rejected in range",
        MALFORMED.len()
    ))
}
