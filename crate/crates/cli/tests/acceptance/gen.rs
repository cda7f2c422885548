//! Random store builders shared by several criteria.

use agx_core::logic::PredicateDef;
use agx_core::value::Timestamp;
use agx_core::{ql, ElementId, ElementKind, KnowledgeFragment, SetSpecArg, Store, Value};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type R = ChaCha8Rng;

pub fn rng(seed: u64) -> R {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

const TEXTS: [&str; 8] = [
    "",
    "plain",
    "with \"quotes\"",
    "tab\tand\nnewline",
    "back\\slash",
    "ünïcødé ✓",
    "semi;colon # hash",
    "  padded  ",
];

pub fn random_value(rng: &mut R, targets: &[ElementId]) -> Value {
    match rng.gen_range(0..8) {
        0 => Value::Int(rng.gen_range(-1_000_000..1_000_000)),
        1 => {
            let r: f64 = match rng.gen_range(0..4) {
                0 => rng.gen_range(-1e6..1e6),
                1 => rng.gen_range(-1.0..1.0) * 1e-300,
                2 => rng.gen::<f64>() * 1e300,
                _ => rng.gen_range(-100i32..100) as f64 / 8.0,
            };
            Value::Real(r)
        }
        2 => Value::text(*TEXTS.choose(rng).unwrap()),
        3 => Value::Bool(rng.gen()),
        4 if !targets.is_empty() => Value::Ref(*targets.choose(rng).unwrap()),
        5 => {
            let n = rng.gen_range(0..12);
            Value::Bytes((0..n).map(|_| rng.gen()).collect())
        }
        6 => Value::Time(Timestamp(rng.gen_range(-2_000_000_000..4_000_000_000))),
        _ => Value::Int(rng.gen_range(0..5)),
    }
}

fn attr_name(rng: &mut R) -> String {
    ["a", "b", "name", "w.x", "score", "t-1", "_k"]
        .choose(rng)
        .unwrap()
        .to_string()
}

/// A store with at most `limit` elements (attributes included) whose
/// containment is at most four levels deep, holding at least one hyperlink
/// and at least one link with a link endpoint.
pub fn archigraph(rng: &mut R, limit: usize) -> Store {
    let mut s = Store::new();
    let budget = rng.gen_range(30..=limit);
    let mut nodes: Vec<ElementId> = Vec::new();

    let nv = rng.gen_range(4..12);
    let mut vertices = Vec::new();
    for i in 0..nv {
        let token = rng.gen_bool(0.3).then(|| format!("v{i}"));
        let v = s.create_element(ElementKind::Vertex, token.as_deref()).unwrap();
        vertices.push(v);
    }
    nodes.extend(&vertices);

    // Containment levels 1..=depth: level k holds level k-1 containers
    // and vertices.
    let depth = rng.gen_range(1..=4);
    let mut below: Vec<ElementId> = vertices.clone();
    let mut containers = Vec::new();
    for level in 1..=depth {
        let count = rng.gen_range(1..=2);
        let mut this = Vec::new();
        for j in 0..count {
            let kind = if rng.gen_bool(0.8) {
                ElementKind::MetaVertex
            } else {
                ElementKind::MetaEdge
            };
            let c = if kind == ElementKind::MetaVertex {
                let token = rng.gen_bool(0.3).then(|| format!("m{level}_{j}"));
                s.create_element(kind, token.as_deref()).unwrap()
            } else {
                let a = *vertices.choose(rng).unwrap();
                let b = *vertices.choose(rng).unwrap();
                s.create_link(kind, &[a], &[b], rng.gen()).unwrap()
            };
            let k = rng.gen_range(1..=3.min(below.len()));
            for &m in below.choose_multiple(rng, k) {
                s.add_member(c, m).unwrap();
            }
            this.push(c);
        }
        containers.extend(&this);
        below = this;
    }
    nodes.extend(&containers);

    // A plain edge, a hyperlink and an edge from an edge.
    let mut links = Vec::new();
    let (a, b) = (vertices[0], vertices[1]);
    links.push(s.create_link(ElementKind::Edge, &[a], &[b], true).unwrap());
    let hyper_from: Vec<ElementId> = vertices.choose_multiple(rng, 2).copied().collect();
    let hyper_to: Vec<ElementId> = vertices.choose_multiple(rng, 2).copied().collect();
    links.push(
        s.create_link(ElementKind::Edge, &hyper_from, &hyper_to, rng.gen())
            .unwrap(),
    );
    let base = *links.choose(rng).unwrap();
    let target = *nodes.choose(rng).unwrap();
    links.push(s.create_link(ElementKind::Edge, &[base], &[target], rng.gen()).unwrap());
    nodes.extend(&links);

    let f = s.create_function("add", rng.gen_bool(0.5).then_some("plus")).unwrap();
    nodes.push(f);

    if let Some(&c) = containers
        .iter()
        .find(|&&c| s.kind(c).unwrap() == ElementKind::MetaVertex)
    {
        s.mark_set(c, SetSpecArg::Finite).unwrap();
    }
    let carrier = vertices[rng.gen_range(0..vertices.len())];
    let payload: Vec<u8> = (0..rng.gen_range(0..20)).map(|_| rng.gen()).collect();
    s.attach_fragment(carrier, KnowledgeFragment::new("text", "text/plain", payload))
        .unwrap();

    if rng.gen_bool(0.5) {
        let body = ql::parse_formula("x.score > 3 AND x.a != 0").unwrap();
        s.register_predicate(
            "high",
            1,
            PredicateDef {
                params: vec!["x".into()],
                body,
            },
        )
        .unwrap();
    }
    if rng.gen_bool(0.5) {
        let r = ql::parse_rule("bump FROM (x:vertex {score}) WHERE x.score < 10 SET x.score := add(x.score, 1)")
            .unwrap();
        s.register_rule(r).unwrap();
    }

    // Fill up with attributes, extra links and adjacency.
    let targets: Vec<ElementId> = nodes.clone();
    while s.len() + 3 <= budget {
        match rng.gen_range(0..10) {
            0..=5 => {
                let owner = *nodes.choose(rng).unwrap();
                let v = random_value(rng, &targets);
                let name = attr_name(rng);
                s.set_attribute(owner, &name, v).unwrap();
            }
            6 => {
                let a = *nodes.choose(rng).unwrap();
                let b = *nodes.choose(rng).unwrap();
                if a != b {
                    s.set_adjacent(a, b).unwrap();
                }
            }
            7 => {
                let a = *nodes.choose(rng).unwrap();
                let b = *nodes.choose(rng).unwrap();
                let l = s.create_link(ElementKind::Edge, &[a], &[b], rng.gen()).unwrap();
                nodes.push(l);
            }
            _ => {
                let v = s.create_element(ElementKind::Vertex, None).unwrap();
                nodes.push(v);
            }
        }
    }
    s
}

/// Kleene truth values for oracles: `None` is unknown.
pub type K = Option<bool>;

pub fn k_and(a: K, b: K) -> K {
    match (a, b) {
        (Some(false), _) | (_, Some(false)) => Some(false),
        (Some(true), Some(true)) => Some(true),
        _ => None,
    }
}

pub fn k_or(a: K, b: K) -> K {
    match (a, b) {
        (Some(true), _) | (_, Some(true)) => Some(true),
        (Some(false), Some(false)) => Some(false),
        _ => None,
    }
}

pub fn k_not(a: K) -> K {
    a.map(|x| !x)
}

pub fn from_k(k: K) -> agx_core::TriBool {
    match k {
        Some(true) => agx_core::TriBool::True,
        Some(false) => agx_core::TriBool::False,
        None => agx_core::TriBool::Unknown,
    }
}

pub fn cmp_holds(a: i64, op: agx_core::logic::CmpOp, b: i64) -> bool {
    use agx_core::logic::CmpOp::*;
    match op {
        Eq => a == b,
        Ne => a != b,
        Gt => a > b,
        Lt => a < b,
        Ge => a >= b,
        Le => a <= b,
    }
}

/// A small formula over one variable's integer attribute `n`, with its own
/// evaluator for use as an oracle.
#[derive(Clone, Debug)]
pub enum Body {
    Truth(K),
    /// `var.n op k`; unknown when `n` is missing.
    Cmp(agx_core::logic::CmpOp, i64),
    Not(Box<Body>),
    And(Vec<Body>),
    Or(Vec<Body>),
}

impl Body {
    pub fn random(rng: &mut R, depth: usize, max_k: i64) -> Body {
        use agx_core::logic::CmpOp;
        let leaf = depth == 0 || rng.gen_bool(0.4);
        if leaf {
            return if rng.gen_bool(0.15) {
                Body::Truth(*[Some(true), Some(false), None].choose(rng).unwrap())
            } else {
                Body::Cmp(*CmpOp::ALL.choose(rng).unwrap(), rng.gen_range(0..=max_k))
            };
        }
        match rng.gen_range(0..3) {
            0 => Body::Not(Box::new(Body::random(rng, depth - 1, max_k))),
            1 => Body::And((0..rng.gen_range(2..=3)).map(|_| Body::random(rng, depth - 1, max_k)).collect()),
            _ => Body::Or((0..rng.gen_range(2..=3)).map(|_| Body::random(rng, depth - 1, max_k)).collect()),
        }
    }

    pub fn eval(&self, n: Option<i64>) -> K {
        match self {
            Body::Truth(k) => *k,
            Body::Cmp(op, k) => n.map(|n| cmp_holds(n, *op, *k)),
            Body::Not(b) => k_not(b.eval(n)),
            Body::And(bs) => bs.iter().fold(Some(true), |acc, b| k_and(acc, b.eval(n))),
            Body::Or(bs) => bs.iter().fold(Some(false), |acc, b| k_or(acc, b.eval(n))),
        }
    }

    pub fn formula(&self, var: &str) -> agx_core::logic::Formula {
        use agx_core::logic::{Formula, Term};
        match self {
            Body::Truth(k) => Formula::Truth(from_k(*k)),
            Body::Cmp(op, k) => Formula::compare(Term::attr(var, "n"), *op, Term::Literal(Value::Int(*k))),
            Body::Not(b) => Formula::not(b.formula(var)),
            Body::And(bs) => Formula::And(bs.iter().map(|b| b.formula(var)).collect()),
            Body::Or(bs) => Formula::Or(bs.iter().map(|b| b.formula(var)).collect()),
        }
    }
}
