//! Three-valued logic over store content: comparisons, predicates,
//! connectives, quantifiers over finite and countable sets, modal operators,
//! function nodes, and forward-chaining inference rules.

mod eval;
mod formula;
mod infer;
mod tri;

pub use eval::{
    compare, value_order, Binding, Env, Evaluator, ACCESSIBLE, DEFAULT_HORIZON, RELATION_ATTR,
    TIME_ATTR,
};
pub use formula::{
    CmpOp, ElemRef, FnTarget, Formula, InferenceRule, MapIds, Modality, PredName, PredicateDef,
    SourcePattern, Subject, Term,
};
pub use infer::{Firing, InferenceOptions, InferenceReport};
pub use tri::TriBool;

/// `approx(a, b, eps)` holds when `|a - b| <= eps`.
pub const BUILTIN_APPROX: &str = "approx";

pub fn is_builtin_predicate(name: &str) -> bool {
    name == BUILTIN_APPROX
}
