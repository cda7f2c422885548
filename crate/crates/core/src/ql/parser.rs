use std::str::FromStr;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::ParseError;
use crate::element::ElementKind;
use crate::logic::{
    CmpOp, ElemRef, FnTarget, Formula, InferenceRule, Modality, PredName, SourcePattern, Subject,
    Term, TriBool,
};
use crate::sets::{IdentityMode, SetOp};
use crate::value::{decode_base64, Timestamp, Value};

pub const KEYWORDS: &[&str] = &[
    "MATCH",
    "WHERE",
    "RETURN",
    "EVAL",
    "HORIZON",
    "INFER",
    "ALL",
    "MAXITER",
    "SET",
    "UNION",
    "INTERSECT",
    "SUBTRACT",
    "BYID",
    "BYVALUE",
    "DEFINE",
    "VERTEX",
    "METAVERTEX",
    "EDGE",
    "METAEDGE",
    "FUNCTION",
    "FROM",
    "TO",
    "DIRECTED",
    "UNDIRECTED",
    "CONTAINS",
    "MEMBER",
    "ADJ",
    "ATTR",
    "FINITE",
    "COUNTABLE",
    "GROUP",
    "PREDICATE",
    "AS",
    "RULE",
    "AND",
    "OR",
    "NOT",
    "FORALL",
    "EXISTS",
    "IN",
    "TRUE",
    "FALSE",
    "UNKNOWN",
    "SAME",
    "STRUCTURAL",
    "NECESSARY",
    "POSSIBLE",
    "KNOWN",
    "BELIEVED",
    "BY",
    "OBLIGATORY",
    "PERMITTED",
    "FORBIDDEN",
    "GOOD",
    "BAD",
    "ALWAYS",
    "EVENTUALLY",
    "NEXT",
    "UNTIL",
    "PRED",
    "BYTES",
    "TIME",
    "HOLDS",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub(crate) struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    pub(crate) fn new(src: &'a str) -> PResult<Self> {
        Ok(Parser {
            src,
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::at(
            self.src,
            self.span().start,
            expected.iter().map(|s| s.to_string()).collect(),
            self.peek().describe(),
        )
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&[kw]))
        }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.error(&[&t.describe()]))
        }
    }

    pub(crate) fn expect_eof(&mut self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.error(&["end of input"]))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn int(&mut self, what: &str) -> PResult<i64> {
        match self.peek() {
            Tok::Int(i) => {
                let i = *i;
                self.bump();
                Ok(i)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn positive(&mut self, what: &str) -> PResult<u64> {
        let at = self.span().start;
        let i = self.int(what)?;
        if i < 1 {
            return Err(ParseError::at(
                self.src,
                at,
                vec![what.to_string()],
                format!("integer {i}"),
            ));
        }
        Ok(i as u64)
    }

    fn elem_ref(&mut self) -> PResult<ElemRef> {
        match self.peek().clone() {
            Tok::Ref(t) => {
                self.bump();
                Ok(ElemRef::Token(t))
            }
            Tok::IdRef(id) => {
                self.bump();
                Ok(ElemRef::Id(id))
            }
            _ => Err(self.error(&["element reference `@name`"])),
        }
    }

    fn elem_refs(&mut self) -> PResult<Vec<ElemRef>> {
        let mut out = vec![self.elem_ref()?];
        while self.eat(&Tok::Comma) {
            out.push(self.elem_ref()?);
        }
        Ok(out)
    }

    /// Attribute name after a `.`: a dotted identifier path written without
    /// spaces, or a quoted string.
    fn attr_name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Ident(s) => {
                self.bump();
                let mut name = s;
                while *self.peek() == Tok::Dot && self.span().start == self.prev_span().end {
                    let dot_end = self.span().end;
                    match self.peek_at(1) {
                        Tok::Ident(next) if self.toks[self.pos + 1].span.start == dot_end => {
                            name.push('.');
                            name.push_str(next);
                            self.bump();
                            self.bump();
                        }
                        _ => break,
                    }
                }
                Ok(name)
            }
            _ => Err(self.error(&["attribute name"])),
        }
    }

    fn kind(&mut self) -> PResult<ElementKind> {
        match self.peek() {
            Tok::Ident(s) => match ElementKind::from_str(s) {
                Ok(k) if k != ElementKind::Attribute => {
                    self.bump();
                    Ok(k)
                }
                _ => Err(self.error(&["element kind"])),
            },
            _ => Err(self.error(&["element kind"])),
        }
    }

    // ------------------------------------------------------------ statements

    pub(crate) fn statement(&mut self) -> PResult<Query> {
        let start = self.span();
        let q = if self.eat_kw("MATCH") {
            self.match_query(start)?
        } else if self.eat_kw("EVAL") {
            let formula = self.formula()?;
            let horizon = if self.eat_kw("HORIZON") {
                Some(self.positive("positive horizon")?)
            } else {
                None
            };
            Query::Eval(EvalQuery {
                formula,
                horizon,
                span: start.to(self.prev_span()),
            })
        } else if self.eat_kw("INFER") {
            self.infer_query(start)?
        } else if self.eat_kw("SET") {
            let target = match self.peek().clone() {
                Tok::Ref(t) => {
                    self.bump();
                    t
                }
                _ => return Err(self.error(&["set name `@name`"])),
            };
            self.expect(Tok::Eq)?;
            let expr = self.set_expr()?;
            let identity = if self.eat_kw("BYVALUE") {
                IdentityMode::ByValueEquality
            } else {
                self.eat_kw("BYID");
                IdentityMode::ById
            };
            Query::Set(SetQuery {
                target,
                expr,
                identity,
                span: start.to(self.prev_span()),
            })
        } else if self.eat_kw("DEFINE") {
            let item = self.define_item()?;
            Query::Define(Define {
                item,
                span: start.to(self.prev_span()),
            })
        } else {
            return Err(self.error(&["MATCH", "EVAL", "INFER", "SET", "DEFINE"]));
        };
        self.expect(Tok::Semi)?;
        Ok(q)
    }

    fn match_query(&mut self, start: Span) -> PResult<Query> {
        self.expect(Tok::LParen)?;
        let var = self.ident("variable")?;
        let kind = if self.eat(&Tok::Colon) {
            Some(self.kind()?)
        } else {
            None
        };
        let mut constraints = Vec::new();
        if self.eat(&Tok::LBrace) {
            loop {
                let name = self.attr_name()?;
                let value = if self.eat(&Tok::Eq) {
                    Some(self.literal()?)
                } else {
                    None
                };
                constraints.push(AttrConstraint { name, value });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
        }
        self.expect(Tok::RParen)?;
        let filter = if self.eat_kw("WHERE") {
            Some(self.formula()?)
        } else {
            None
        };
        self.expect_kw("RETURN")?;
        let mut returns = vec![self.term()?];
        while self.eat(&Tok::Comma) {
            returns.push(self.term()?);
        }
        Ok(Query::Match(MatchQuery {
            var,
            kind,
            constraints,
            filter,
            returns,
            span: start.to(self.prev_span()),
        }))
    }

    fn infer_query(&mut self, start: Span) -> PResult<Query> {
        let target = if self.eat_kw("ALL") {
            InferTarget::All
        } else {
            let mut items = Vec::new();
            loop {
                if self.eat_kw("RULE") {
                    items.push(InferItem::Inline(self.rule()?));
                } else {
                    items.push(InferItem::Named(self.ident("rule name")?));
                }
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            InferTarget::Items(items)
        };
        let max_iter = if self.eat_kw("MAXITER") {
            Some(self.positive("positive iteration bound")? as usize)
        } else {
            None
        };
        Ok(Query::Infer(InferQuery {
            target,
            max_iter,
            span: start.to(self.prev_span()),
        }))
    }

    fn set_expr(&mut self) -> PResult<SetExpr> {
        let op = if self.eat_kw("UNION") {
            SetOp::Union
        } else if self.eat_kw("INTERSECT") {
            SetOp::Intersection
        } else if self.eat_kw("SUBTRACT") {
            SetOp::Subtraction
        } else if matches!(self.peek(), Tok::Ref(_) | Tok::IdRef(_)) {
            return Ok(SetExpr::Ref(self.elem_ref()?));
        } else {
            return Err(self.error(&["UNION", "INTERSECT", "SUBTRACT", "set reference"]));
        };
        self.expect(Tok::LParen)?;
        let left = self.set_expr()?;
        self.expect(Tok::Comma)?;
        let right = self.set_expr()?;
        self.expect(Tok::RParen)?;
        Ok(SetExpr::Op {
            op,
            left: Box::new(left),
            right: Box::new(right),
        })
    }

    fn attr_list(&mut self) -> PResult<Vec<(String, Term)>> {
        let mut out = Vec::new();
        if self.eat(&Tok::LBrace) {
            loop {
                let name = self.attr_name()?;
                self.expect(Tok::Eq)?;
                out.push((name, self.term()?));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
        }
        Ok(out)
    }

    fn token_name(&mut self) -> PResult<String> {
        self.ident("element name")
    }

    fn define_item(&mut self) -> PResult<DefineItem> {
        if self.eat_kw("VERTEX") {
            let token = self.token_name()?;
            let attrs = self.attr_list()?;
            return Ok(DefineItem::Element {
                kind: ElementKind::Vertex,
                token,
                attrs,
                members: Vec::new(),
            });
        }
        if self.eat_kw("METAVERTEX") {
            let token = self.token_name()?;
            let attrs = self.attr_list()?;
            let members = if self.eat_kw("CONTAINS") {
                self.elem_refs()?
            } else {
                Vec::new()
            };
            return Ok(DefineItem::Element {
                kind: ElementKind::MetaVertex,
                token,
                attrs,
                members,
            });
        }
        if self.eat_kw("FUNCTION") {
            let token = self.token_name()?;
            self.expect(Tok::Eq)?;
            let function = self.ident("function name")?;
            return Ok(DefineItem::Function { token, function });
        }
        let link = if self.eat_kw("EDGE") {
            Some(ElementKind::Edge)
        } else if self.eat_kw("METAEDGE") {
            Some(ElementKind::MetaEdge)
        } else {
            None
        };
        if let Some(kind) = link {
            let token = if self.is_kw("FROM") {
                None
            } else {
                Some(self.token_name()?)
            };
            self.expect_kw("FROM")?;
            let from = self.elem_refs()?;
            self.expect_kw("TO")?;
            let to = self.elem_refs()?;
            let directed = if self.eat_kw("DIRECTED") {
                true
            } else if self.eat_kw("UNDIRECTED") {
                false
            } else {
                return Err(self.error(&["DIRECTED", "UNDIRECTED"]));
            };
            let attrs = self.attr_list()?;
            let members = if kind == ElementKind::MetaEdge && self.eat_kw("CONTAINS") {
                self.elem_refs()?
            } else {
                Vec::new()
            };
            return Ok(DefineItem::Link {
                kind,
                token,
                from,
                to,
                directed,
                attrs,
                members,
            });
        }
        if self.eat_kw("MEMBER") {
            let container = self.elem_ref()?;
            self.expect_kw("CONTAINS")?;
            return Ok(DefineItem::Member {
                container,
                members: self.elem_refs()?,
            });
        }
        if self.eat_kw("ADJ") {
            let a = self.elem_ref()?;
            self.expect(Tok::Comma)?;
            let b = self.elem_ref()?;
            return Ok(DefineItem::Adjacent { a, b });
        }
        if self.eat_kw("ATTR") {
            let owner = self.elem_ref()?;
            self.expect(Tok::Dot)?;
            let name = self.attr_name()?;
            self.expect(Tok::Eq)?;
            return Ok(DefineItem::Attr {
                owner,
                name,
                value: self.term()?,
            });
        }
        if self.eat_kw("SET") {
            let container = self.elem_ref()?;
            let kind = if self.eat_kw("FINITE") {
                SetKind::Finite
            } else if self.eat_kw("GROUP") {
                SetKind::Group
            } else if self.eat_kw("COUNTABLE") {
                SetKind::Countable(self.ident("generator name")?)
            } else {
                return Err(self.error(&["FINITE", "GROUP", "COUNTABLE"]));
            };
            return Ok(DefineItem::Set { container, kind });
        }
        if self.eat_kw("PREDICATE") {
            let name = self.ident("predicate name")?;
            self.expect(Tok::LParen)?;
            let mut params = Vec::new();
            if *self.peek() != Tok::RParen {
                params.push(self.ident("parameter")?);
                while self.eat(&Tok::Comma) {
                    params.push(self.ident("parameter")?);
                }
            }
            self.expect(Tok::RParen)?;
            self.expect_kw("AS")?;
            return Ok(DefineItem::Predicate {
                name,
                params,
                body: self.formula()?,
            });
        }
        if self.eat_kw("RULE") {
            return Ok(DefineItem::Rule(self.rule()?));
        }
        Err(self.error(&[
            "VERTEX",
            "METAVERTEX",
            "FUNCTION",
            "EDGE",
            "METAEDGE",
            "MEMBER",
            "ADJ",
            "ATTR",
            "SET",
            "PREDICATE",
            "RULE",
        ]))
    }

    /// `name FROM (v:kind {a, b}) WHERE f, ... SET v.attr := term`
    pub(crate) fn rule(&mut self) -> PResult<InferenceRule> {
        let name = self.ident("rule name")?;
        self.expect_kw("FROM")?;
        let mut sources = Vec::new();
        loop {
            self.expect(Tok::LParen)?;
            let var = self.ident("variable")?;
            let kind = if self.eat(&Tok::Colon) {
                Some(self.kind()?)
            } else {
                None
            };
            let mut p = SourcePattern::new(&var, kind);
            if self.eat(&Tok::LBrace) {
                loop {
                    p.required_attrs.push(self.attr_name()?);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::RBrace)?;
            }
            self.expect(Tok::RParen)?;
            if self.eat_kw("WHERE") {
                p.guard = self.formula()?;
            }
            sources.push(p);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect_kw("SET")?;
        let target_var = self.ident("variable")?;
        self.expect(Tok::Dot)?;
        let target_attr = self.attr_name()?;
        self.expect(Tok::Assign)?;
        let value = self.term()?;
        Ok(InferenceRule {
            name,
            sources,
            target_var,
            target_attr,
            value,
        })
    }

    // -------------------------------------------------------------- formulas

    pub(crate) fn formula(&mut self) -> PResult<Formula> {
        let first = self.conjunction()?;
        if !self.is_kw("OR") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat_kw("OR") {
            parts.push(self.conjunction()?);
        }
        Ok(Formula::Or(parts))
    }

    fn conjunction(&mut self) -> PResult<Formula> {
        let first = self.unary()?;
        if !self.is_kw("AND") {
            return Ok(first);
        }
        let mut parts = vec![first];
        while self.eat_kw("AND") {
            parts.push(self.unary()?);
        }
        Ok(Formula::And(parts))
    }

    fn unary(&mut self) -> PResult<Formula> {
        if self.eat_kw("NOT") {
            return Ok(Formula::not(self.unary()?));
        }
        for (kw, universal) in [("FORALL", true), ("EXISTS", false)] {
            if self.eat_kw(kw) {
                let var = self.ident("variable")?;
                self.expect_kw("IN")?;
                let set = self.elem_ref()?;
                self.expect(Tok::Colon)?;
                let body = self.formula()?;
                return Ok(if universal {
                    Formula::forall(&var, set, body)
                } else {
                    Formula::exists(&var, set, body)
                });
            }
        }
        if let Some(m) = self.modal_head()? {
            let var = self.ident("variable")?;
            self.expect_kw("IN")?;
            let frame = self.elem_ref()?;
            self.expect(Tok::Colon)?;
            if let Modality::Until { .. } = m {
                self.expect(Tok::LParen)?;
                let body = self.formula()?;
                self.expect(Tok::RParen)?;
                self.expect_kw("UNTIL")?;
                self.expect(Tok::LParen)?;
                let goal = self.formula()?;
                self.expect(Tok::RParen)?;
                return Ok(Formula::modal(
                    Modality::Until {
                        goal: Box::new(goal),
                    },
                    &var,
                    frame,
                    body,
                ));
            }
            let body = self.formula()?;
            return Ok(Formula::modal(m, &var, frame, body));
        }
        self.primary()
    }

    fn modal_head(&mut self) -> PResult<Option<Modality>> {
        let simple = [
            ("NECESSARY", Modality::Necessary),
            ("POSSIBLE", Modality::Possible),
            ("OBLIGATORY", Modality::Obligatory),
            ("PERMITTED", Modality::Permitted),
            ("FORBIDDEN", Modality::Forbidden),
            ("GOOD", Modality::Good),
            ("BAD", Modality::Bad),
            ("ALWAYS", Modality::Always),
            ("EVENTUALLY", Modality::Eventually),
            ("NEXT", Modality::Next),
        ];
        for (kw, m) in simple {
            if self.eat_kw(kw) {
                return Ok(Some(m));
            }
        }
        if self.eat_kw("KNOWN") {
            self.expect_kw("BY")?;
            return Ok(Some(Modality::Known {
                agent: self.elem_ref()?,
            }));
        }
        if self.eat_kw("BELIEVED") {
            self.expect_kw("BY")?;
            return Ok(Some(Modality::Believed {
                agent: self.elem_ref()?,
            }));
        }
        if self.eat_kw("UNTIL") {
            return Ok(Some(Modality::Until {
                goal: Box::new(Formula::Truth(TriBool::True)),
            }));
        }
        Ok(None)
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        Some(match self.peek() {
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            Tok::Lt => CmpOp::Lt,
            Tok::Gt => CmpOp::Gt,
            Tok::Le => CmpOp::Le,
            Tok::Ge => CmpOp::Ge,
            _ => return None,
        })
    }

    fn primary(&mut self) -> PResult<Formula> {
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(Tok::RParen)?;
            return Ok(f);
        }
        if self.eat_kw("UNKNOWN") {
            return Ok(Formula::Truth(TriBool::Unknown));
        }
        for (kw, t) in [("TRUE", TriBool::True), ("FALSE", TriBool::False)] {
            if self.is_kw(kw)
                && !matches!(
                    self.peek_at(1),
                    Tok::Eq | Tok::Ne | Tok::Lt | Tok::Gt | Tok::Le | Tok::Ge
                )
            {
                self.bump();
                return Ok(Formula::Truth(t));
            }
        }
        if self.eat_kw("SAME") {
            let mode = if self.eat_kw("STRUCTURAL") {
                crate::canon::EqualityMode::Structural
            } else if self.eat_kw("BYVALUE") {
                crate::canon::EqualityMode::ByValue
            } else {
                return Err(self.error(&["STRUCTURAL", "BYVALUE"]));
            };
            self.expect(Tok::LParen)?;
            let a = self.subject()?;
            self.expect(Tok::Comma)?;
            let b = self.subject()?;
            self.expect(Tok::RParen)?;
            return Ok(Formula::EqualsElem { a, b, mode });
        }
        if self.eat_kw("HOLDS") {
            let subject = self.subject()?;
            self.expect(Tok::Dot)?;
            let attr = self.attr_name()?;
            let args = self.args()?;
            return Ok(Formula::Predicate {
                name: PredName::Attr { subject, attr },
                args,
            });
        }
        let lhs = self.term()?;
        if let Some(op) = self.cmp_op() {
            self.bump();
            let rhs = self.term()?;
            return Ok(Formula::compare(lhs, op, rhs));
        }
        match lhs {
            Term::Apply {
                target: FnTarget::Named(name),
                args,
            } => Ok(Formula::Predicate {
                name: PredName::Named(name),
                args,
            }),
            _ => Err(self.error(&["comparison operator"])),
        }
    }

    fn subject(&mut self) -> PResult<Subject> {
        match self.peek() {
            Tok::Ref(_) | Tok::IdRef(_) => Ok(Subject::Elem(self.elem_ref()?)),
            _ => Ok(Subject::Var(self.ident("variable or element reference")?)),
        }
    }

    fn args(&mut self) -> PResult<Vec<Term>> {
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            args.push(self.term()?);
            while self.eat(&Tok::Comma) {
                args.push(self.term()?);
            }
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    // ----------------------------------------------------------------- terms

    pub(crate) fn term(&mut self) -> PResult<Term> {
        match self.peek().clone() {
            Tok::Ref(_) | Tok::IdRef(_) => {
                let r = self.elem_ref()?;
                if self.eat(&Tok::Dot) {
                    Ok(Term::Attr {
                        subject: Subject::Elem(r),
                        name: self.attr_name()?,
                    })
                } else if *self.peek() == Tok::LParen {
                    Ok(Term::Apply {
                        target: FnTarget::Node(r),
                        args: self.args()?,
                    })
                } else {
                    Ok(Term::Elem(r))
                }
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    Ok(Term::Apply {
                        target: FnTarget::Named(s),
                        args: self.args()?,
                    })
                } else if self.eat(&Tok::Dot) {
                    Ok(Term::Attr {
                        subject: Subject::Var(s),
                        name: self.attr_name()?,
                    })
                } else {
                    Ok(Term::Var(s))
                }
            }
            _ => self.literal().map(Term::Literal).map_err(|mut e| {
                if e.expected == ["literal"] {
                    e.expected = vec!["term".into()];
                }
                e
            }),
        }
    }

    pub(crate) fn literal(&mut self) -> PResult<Value> {
        let v = match self.peek().clone() {
            Tok::Int(i) => Value::Int(i),
            Tok::Real(r) => Value::Real(r),
            Tok::Str(s) => Value::Text(s),
            Tok::IdRef(id) => Value::Ref(id),
            Tok::Ident(k) if k == "TRUE" => Value::Bool(true),
            Tok::Ident(k) if k == "FALSE" => Value::Bool(false),
            Tok::Ident(k) if k == "PRED" => {
                self.bump();
                return Ok(Value::Predicate(self.ident("predicate name")?));
            }
            Tok::Ident(k) if k == "BYTES" || k == "TIME" => {
                self.bump();
                let Tok::Str(s) = self.peek().clone() else {
                    return Err(self.error(&["string literal"]));
                };
                let v = if k == "BYTES" {
                    decode_base64(&s).map(Value::Bytes)
                } else {
                    Timestamp::parse_rfc3339(&s).map(Value::Time)
                };
                match v {
                    Some(v) => v,
                    None => {
                        return Err(self.error(&[if k == "BYTES" {
                            "base64 text"
                        } else {
                            "RFC 3339 instant"
                        }]))
                    }
                }
            }
            _ => return Err(self.error(&["literal"])),
        };
        self.bump();
        Ok(v)
    }
}
