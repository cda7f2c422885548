use std::fmt::{self, Write as _};

use super::ast::*;
use super::parser::is_keyword;
use crate::canon::EqualityMode;
use crate::logic::{
    ElemRef, FnTarget, Formula, InferenceRule, Modality, PredName, Subject, Term, TriBool,
};
use crate::sets::IdentityMode;
use crate::value::{encode_base64, format_real, quote, Value};

pub fn print_elem_ref(r: &ElemRef) -> String {
    match r {
        ElemRef::Token(t) => format!("@{t}"),
        ElemRef::Id(id) => format!("@#{}", id.to_hex()),
    }
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(f) if f.is_ascii_alphabetic() || f == '_')
        && c.all(|x| x.is_ascii_alphanumeric() || x == '_' || x == '-')
}

/// Attribute names print bare when they lex back as a dotted identifier path.
pub fn print_attr_name(name: &str) -> String {
    if name.split('.').all(is_ident) {
        name.to_string()
    } else {
        quote(name)
    }
}

pub fn print_literal(v: &Value) -> String {
    match v {
        Value::Int(i) => i.to_string(),
        Value::Real(r) => format_real(*r),
        Value::Text(s) => quote(s),
        Value::Bool(true) => "TRUE".into(),
        Value::Bool(false) => "FALSE".into(),
        Value::Ref(id) => format!("@#{}", id.to_hex()),
        Value::Predicate(p) => format!("PRED {p}"),
        Value::Bytes(b) => format!("BYTES {}", quote(&encode_base64(b))),
        Value::Time(t) => format!("TIME {}", quote(&t.to_rfc3339())),
    }
}

fn print_subject(s: &Subject) -> String {
    match s {
        Subject::Var(v) => v.clone(),
        Subject::Elem(r) => print_elem_ref(r),
    }
}

fn print_args(args: &[Term]) -> String {
    let parts: Vec<String> = args.iter().map(print_term).collect();
    format!("({})", parts.join(", "))
}

pub fn print_term(t: &Term) -> String {
    match t {
        Term::Literal(v) => print_literal(v),
        Term::Attr { subject, name } => {
            format!("{}.{}", print_subject(subject), print_attr_name(name))
        }
        Term::Var(v) => v.clone(),
        Term::Elem(r) => print_elem_ref(r),
        Term::Apply {
            target: FnTarget::Named(n),
            args,
        } => format!("{n}{}", print_args(args)),
        Term::Apply {
            target: FnTarget::Node(r),
            args,
        } => format!("{}{}", print_elem_ref(r), print_args(args)),
    }
}

/// Children that would otherwise swallow or split their surroundings.
fn needs_parens(f: &Formula) -> bool {
    matches!(
        f,
        Formula::And(_)
            | Formula::Or(_)
            | Formula::ForAll { .. }
            | Formula::Exists { .. }
            | Formula::Modal { .. }
    )
}

fn child(f: &Formula) -> String {
    if needs_parens(f) {
        format!("({})", print_formula(f))
    } else {
        print_formula(f)
    }
}

pub fn print_formula(f: &Formula) -> String {
    match f {
        Formula::Truth(TriBool::True) => "TRUE".into(),
        Formula::Truth(TriBool::False) => "FALSE".into(),
        Formula::Truth(TriBool::Unknown) => "UNKNOWN".into(),
        Formula::Compare { lhs, op, rhs } => {
            format!("{} {} {}", print_term(lhs), op.symbol(), print_term(rhs))
        }
        Formula::Predicate {
            name: PredName::Named(n),
            args,
        } => format!("{n}{}", print_args(args)),
        Formula::Predicate {
            name: PredName::Attr { subject, attr },
            args,
        } => {
            format!(
                "HOLDS {}.{}{}",
                print_subject(subject),
                print_attr_name(attr),
                print_args(args)
            )
        }
        Formula::Not(g) => format!("NOT {}", child(g)),
        Formula::And(fs) => fs.iter().map(child).collect::<Vec<_>>().join(" AND "),
        Formula::Or(fs) => fs.iter().map(child).collect::<Vec<_>>().join(" OR "),
        Formula::ForAll { var, set, body } => format!(
            "FORALL {var} IN {} : {}",
            print_elem_ref(set),
            print_formula(body)
        ),
        Formula::Exists { var, set, body } => format!(
            "EXISTS {var} IN {} : {}",
            print_elem_ref(set),
            print_formula(body)
        ),
        Formula::Modal {
            op,
            var,
            frame,
            body,
        } => {
            let head = match op {
                Modality::Known { agent } | Modality::Believed { agent } => {
                    format!("{} BY {}", op.keyword(), print_elem_ref(agent))
                }
                _ => op.keyword().to_string(),
            };
            let frame = print_elem_ref(frame);
            match op {
                Modality::Until { goal } => format!(
                    "{head} {var} IN {frame} : ({}) UNTIL ({})",
                    print_formula(body),
                    print_formula(goal)
                ),
                _ => format!("{head} {var} IN {frame} : {}", print_formula(body)),
            }
        }
        Formula::EqualsElem { a, b, mode } => {
            let m = match mode {
                EqualityMode::Structural => "STRUCTURAL",
                EqualityMode::ByValue => "BYVALUE",
            };
            format!("SAME {m} ({}, {})", print_subject(a), print_subject(b))
        }
    }
}

/// `name FROM (...) WHERE ..., ... SET v.attr := term`
pub fn print_rule(r: &InferenceRule) -> String {
    let mut out = format!("{} FROM ", r.name);
    for (i, s) in r.sources.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push('(');
        out.push_str(&s.var);
        if let Some(k) = s.kind {
            let _ = write!(out, ":{}", k.name());
        }
        if !s.required_attrs.is_empty() {
            let names: Vec<String> = s
                .required_attrs
                .iter()
                .map(|a| print_attr_name(a))
                .collect();
            let _ = write!(out, " {{{}}}", names.join(", "));
        }
        out.push(')');
        if s.guard != Formula::Truth(TriBool::True) {
            let _ = write!(out, " WHERE {}", print_formula(&s.guard));
        }
    }
    let _ = write!(
        out,
        " SET {}.{} := {}",
        r.target_var,
        print_attr_name(&r.target_attr),
        print_term(&r.value)
    );
    out
}

fn print_attr_list(attrs: &[(String, Term)]) -> String {
    if attrs.is_empty() {
        return String::new();
    }
    let parts: Vec<String> = attrs
        .iter()
        .map(|(n, t)| format!("{} = {}", print_attr_name(n), print_term(t)))
        .collect();
    format!(" {{{}}}", parts.join(", "))
}

fn print_refs(rs: &[ElemRef]) -> String {
    rs.iter().map(print_elem_ref).collect::<Vec<_>>().join(", ")
}

fn print_set_expr(e: &SetExpr) -> String {
    match e {
        SetExpr::Ref(r) => print_elem_ref(r),
        SetExpr::Op { op, left, right } => {
            format!(
                "{}({}, {})",
                op.name().to_uppercase(),
                print_set_expr(left),
                print_set_expr(right)
            )
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Match(m) => {
                write!(f, "MATCH ({}", m.var)?;
                if let Some(k) = m.kind {
                    write!(f, ":{}", k.name())?;
                }
                if !m.constraints.is_empty() {
                    let parts: Vec<String> = m
                        .constraints
                        .iter()
                        .map(|c| match &c.value {
                            Some(v) => {
                                format!("{} = {}", print_attr_name(&c.name), print_literal(v))
                            }
                            None => print_attr_name(&c.name),
                        })
                        .collect();
                    write!(f, " {{{}}}", parts.join(", "))?;
                }
                f.write_str(")")?;
                if let Some(w) = &m.filter {
                    write!(f, " WHERE {}", print_formula(w))?;
                }
                let rs: Vec<String> = m.returns.iter().map(print_term).collect();
                write!(f, " RETURN {};", rs.join(", "))
            }
            Query::Eval(e) => {
                write!(f, "EVAL {}", print_formula(&e.formula))?;
                if let Some(h) = e.horizon {
                    write!(f, " HORIZON {h}")?;
                }
                f.write_str(";")
            }
            Query::Infer(i) => {
                f.write_str("INFER ")?;
                match &i.target {
                    InferTarget::All => f.write_str("ALL")?,
                    InferTarget::Items(items) => {
                        let parts: Vec<String> = items
                            .iter()
                            .map(|it| match it {
                                InferItem::Named(n) => n.clone(),
                                InferItem::Inline(r) => format!("RULE {}", print_rule(r)),
                            })
                            .collect();
                        f.write_str(&parts.join(", "))?;
                    }
                }
                if let Some(m) = i.max_iter {
                    write!(f, " MAXITER {m}")?;
                }
                f.write_str(";")
            }
            Query::Set(s) => {
                let id = match s.identity {
                    IdentityMode::ById => "BYID",
                    IdentityMode::ByValueEquality => "BYVALUE",
                };
                write!(f, "SET @{} = {} {id};", s.target, print_set_expr(&s.expr))
            }
            Query::Define(d) => {
                f.write_str("DEFINE ")?;
                match &d.item {
                    DefineItem::Element {
                        kind,
                        token,
                        attrs,
                        members,
                    } => {
                        write!(
                            f,
                            "{} {token}{}",
                            kind.name().to_uppercase(),
                            print_attr_list(attrs)
                        )?;
                        if !members.is_empty() {
                            write!(f, " CONTAINS {}", print_refs(members))?;
                        }
                    }
                    DefineItem::Function { token, function } => {
                        write!(f, "FUNCTION {token} = {function}")?
                    }
                    DefineItem::Link {
                        kind,
                        token,
                        from,
                        to,
                        directed,
                        attrs,
                        members,
                    } => {
                        write!(f, "{}", kind.name().to_uppercase())?;
                        if let Some(t) = token {
                            write!(f, " {t}")?;
                        }
                        write!(
                            f,
                            " FROM {} TO {} {}{}",
                            print_refs(from),
                            print_refs(to),
                            if *directed { "DIRECTED" } else { "UNDIRECTED" },
                            print_attr_list(attrs)
                        )?;
                        if !members.is_empty() {
                            write!(f, " CONTAINS {}", print_refs(members))?;
                        }
                    }
                    DefineItem::Member { container, members } => write!(
                        f,
                        "MEMBER {} CONTAINS {}",
                        print_elem_ref(container),
                        print_refs(members)
                    )?,
                    DefineItem::Adjacent { a, b } => {
                        write!(f, "ADJ {}, {}", print_elem_ref(a), print_elem_ref(b))?
                    }
                    DefineItem::Attr { owner, name, value } => write!(
                        f,
                        "ATTR {}.{} = {}",
                        print_elem_ref(owner),
                        print_attr_name(name),
                        print_term(value)
                    )?,
                    DefineItem::Set { container, kind } => {
                        let k = match kind {
                            SetKind::Finite => "FINITE".to_string(),
                            SetKind::Group => "GROUP".to_string(),
                            SetKind::Countable(g) => format!("COUNTABLE {g}"),
                        };
                        write!(f, "SET {} {k}", print_elem_ref(container))?
                    }
                    DefineItem::Predicate { name, params, body } => write!(
                        f,
                        "PREDICATE {name}({}) AS {}",
                        params.join(", "),
                        print_formula(body)
                    )?,
                    DefineItem::Rule(r) => write!(f, "RULE {}", print_rule(r))?,
                }
                f.write_str(";")
            }
        }
    }
}

/// Whether `s` can be printed as a variable, rule or predicate name.
pub fn is_plain_name(s: &str) -> bool {
    is_ident(s) && !is_keyword(s)
}
