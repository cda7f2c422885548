//! Host-side hooks: functions, countable-set generators, fragment converters
//! and fragment-kind extensions. Hooks are not persisted; a store rebuilt
//! from text or a log starts from the bundled registry unless one is given.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::knowledge::{self, FormalizationGroup, KnowledgeFragment};
use crate::value::Value;

pub type FunctionHook = Arc<dyn Fn(&[Value]) -> Option<Value> + Send + Sync>;
pub type GeneratorHook = Arc<dyn Fn(u64) -> Vec<(String, Value)> + Send + Sync>;
pub type ConverterHook =
    Arc<dyn Fn(&KnowledgeFragment) -> Result<KnowledgeFragment, String> + Send + Sync>;

#[derive(Clone)]
pub struct FunctionDef {
    pub arity: usize,
    pub hook: FunctionHook,
}

#[derive(Clone)]
pub struct GeneratorDef {
    /// Names of the object types the generator produces.
    pub types: Vec<String>,
    pub hook: GeneratorHook,
}

#[derive(Clone, Default)]
pub struct Registry {
    functions: BTreeMap<String, FunctionDef>,
    generators: BTreeMap<String, GeneratorDef>,
    converters: BTreeMap<(String, String), ConverterHook>,
    kinds: BTreeMap<String, FormalizationGroup>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("functions", &self.functions.keys().collect::<Vec<_>>())
            .field("generators", &self.generators.keys().collect::<Vec<_>>())
            .field("converters", &self.converters.keys().collect::<Vec<_>>())
            .field("kinds", &self.kinds)
            .finish()
    }
}

impl Registry {
    /// An empty registry with no hooks at all.
    pub fn empty() -> Self {
        Registry::default()
    }

    /// The bundled functions, generators and converters.
    pub fn bundled() -> Self {
        let mut r = Registry::empty();
        r.register_function("add", 2, |a| numeric(a, i64::checked_add, |x, y| x + y));
        r.register_function("sub", 2, |a| numeric(a, i64::checked_sub, |x, y| x - y));
        r.register_function("mul", 2, |a| numeric(a, i64::checked_mul, |x, y| x * y));
        r.register_function("neg", 1, |a| match &a[0] {
            Value::Int(i) => i.checked_neg().map(Value::Int),
            Value::Real(x) => Some(Value::Real(-x)),
            _ => None,
        });
        r.register_function("abs", 1, |a| match &a[0] {
            Value::Int(i) => i.checked_abs().map(Value::Int),
            Value::Real(x) => Some(Value::Real(x.abs())),
            _ => None,
        });
        r.register_function("id", 1, |a| Some(a[0].clone()));
        r.register_function("concat", 2, |a| match (&a[0], &a[1]) {
            (Value::Text(x), Value::Text(y)) => Some(Value::Text(format!("{x}{y}"))),
            _ => None,
        });

        r.register_generator("naturals", vec!["natural".into()], |i| {
            vec![("n".into(), Value::Int(i as i64))]
        });
        r.register_generator("evens", vec!["even".into()], |i| {
            vec![("n".into(), Value::Int(2 * i as i64))]
        });
        r.register_generator("constant", vec!["constant".into()], |_| {
            vec![("n".into(), Value::Int(0))]
        });

        for (kind, _) in knowledge::BUNDLED_KINDS {
            r.register_converter(kind, kind, |f| Ok(f.clone()));
        }
        r.register_converter("text", "knowledge-graph", knowledge::split_lines_to_graph);
        r
    }

    pub fn register_function(
        &mut self,
        name: &str,
        arity: usize,
        hook: impl Fn(&[Value]) -> Option<Value> + Send + Sync + 'static,
    ) {
        self.functions.insert(
            name.to_string(),
            FunctionDef {
                arity,
                hook: Arc::new(hook),
            },
        );
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.get(name)
    }

    pub fn function_names(&self) -> impl Iterator<Item = &str> {
        self.functions.keys().map(String::as_str)
    }

    pub fn register_generator(
        &mut self,
        name: &str,
        types: Vec<String>,
        hook: impl Fn(u64) -> Vec<(String, Value)> + Send + Sync + 'static,
    ) {
        self.generators.insert(
            name.to_string(),
            GeneratorDef {
                types,
                hook: Arc::new(hook),
            },
        );
    }

    pub fn generator(&self, name: &str) -> Option<&GeneratorDef> {
        self.generators.get(name)
    }

    pub fn register_converter(
        &mut self,
        from: &str,
        to: &str,
        hook: impl Fn(&KnowledgeFragment) -> Result<KnowledgeFragment, String> + Send + Sync + 'static,
    ) {
        self.converters
            .insert((from.to_string(), to.to_string()), Arc::new(hook));
    }

    pub fn converter(&self, from: &str, to: &str) -> Option<&ConverterHook> {
        self.converters.get(&(from.to_string(), to.to_string()))
    }

    /// Adds a fragment kind outside the bundled vocabulary.
    pub fn register_kind(&mut self, kind: &str, group: FormalizationGroup) {
        self.kinds.insert(kind.to_string(), group);
    }

    pub(crate) fn extension_kind(&self, kind: &str) -> Option<FormalizationGroup> {
        self.kinds.get(kind).copied()
    }
}

fn numeric(
    args: &[Value],
    int_op: fn(i64, i64) -> Option<i64>,
    real_op: fn(f64, f64) -> f64,
) -> Option<Value> {
    let out = match (&args[0], &args[1]) {
        (Value::Int(a), Value::Int(b)) => return int_op(*a, *b).map(Value::Int),
        (Value::Real(a), Value::Real(b)) => real_op(*a, *b),
        (Value::Int(a), Value::Real(b)) => real_op(*a as f64, *b),
        (Value::Real(a), Value::Int(b)) => real_op(*a, *b as f64),
        _ => return None,
    };
    out.is_finite().then_some(Value::Real(out))
}
