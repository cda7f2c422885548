//! A keyword-led, semicolon-terminated query language: MATCH, EVAL, INFER,
//! SET and DEFINE statements over a store. The grammar is documented in
//! `docs/grammar.ebnf`.

mod ast;
mod exec;
mod lexer;
mod parser;
mod printer;

use std::fmt;

pub use ast::*;
pub use exec::{execute, execute_read, Cell, Diagnostic, ExecOptions, ResultSet};
pub use parser::{is_keyword, KEYWORDS};
pub use printer::{
    is_plain_name, print_attr_name, print_elem_ref, print_formula, print_literal, print_rule,
    print_term,
};

use crate::logic::{Formula, InferenceRule, Term};
use parser::Parser;

/// First syntax error, with a 1-based position and the tokens that would
/// have been accepted there.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    /// Byte offset into the input; always `<= input.len()`.
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

impl ParseError {
    pub(crate) fn at(src: &str, offset: usize, expected: Vec<String>, found: String) -> Self {
        let offset = offset.min(src.len());
        let before = &src[..offset];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().unwrap_or("").chars().count() + 1;
        ParseError {
            line,
            col,
            offset,
            expected,
            found,
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: expected {}, found {}",
            self.line,
            self.col,
            self.expected.join(" or "),
            self.found
        )
    }
}

impl std::error::Error for ParseError {}

/// Parses exactly one statement.
pub fn parse(src: &str) -> Result<Query, ParseError> {
    let mut p = Parser::new(src)?;
    let q = p.statement()?;
    p.expect_eof()?;
    Ok(q)
}

/// Parses a sequence of statements.
pub fn parse_script(src: &str) -> Result<Vec<Query>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.statement()?);
    }
    Ok(out)
}

pub fn parse_formula(src: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    p.expect_eof()?;
    Ok(f)
}

pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses the `name FROM ... SET ...` form produced by [`print_rule`].
pub fn parse_rule(src: &str) -> Result<InferenceRule, ParseError> {
    let mut p = Parser::new(src)?;
    let r = p.rule()?;
    p.expect_eof()?;
    Ok(r)
}
