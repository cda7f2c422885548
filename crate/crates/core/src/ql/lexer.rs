use super::ast::Span;
use super::ParseError;
use crate::id::ElementId;
use crate::value::unquote_prefix;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    /// Identifiers and keywords; keywords are matched by the parser.
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    /// `@token`
    Ref(String),
    /// `@#<32 hex digits>`
    IdRef(ElementId),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Semi,
    Colon,
    Dot,
    Assign,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Real(r) => format!("real {r:?}"),
            Tok::Str(_) => "string literal".into(),
            Tok::Ref(t) => format!("`@{t}`"),
            Tok::IdRef(id) => format!("`@#{}`", id.to_hex()),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", punct(other)),
        }
    }
}

fn punct(t: &Tok) -> &'static str {
    match t {
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Comma => ",",
        Tok::Semi => ";",
        Tok::Colon => ":",
        Tok::Dot => ".",
        Tok::Assign => ":=",
        Tok::Eq => "=",
        Tok::Ne => "!=",
        Tok::Lt => "<",
        Tok::Gt => ">",
        Tok::Le => "<=",
        Tok::Ge => ">=",
        _ => "",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |at: usize, expected: &str, found: String| {
        ParseError::at(src, at, vec![expected.to_string()], found)
    };
    while i < src.len() {
        let c = src[i..].chars().next().expect("in bounds");
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if src[i..].starts_with("--") {
            while i < src.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if is_ident_start(c) {
            while i < src.len() && is_ident_char(bytes[i] as char) {
                i += 1;
            }
            Tok::Ident(src[start..i].to_string())
        } else if c.is_ascii_digit()
            || (c == '-' && src[i + 1..].starts_with(|d: char| d.is_ascii_digit()))
        {
            let (tok, end) = number(src, start)?;
            i = end;
            tok
        } else if c == '"' {
            match unquote_prefix(&src[i..]) {
                Ok((s, used)) => {
                    i += used;
                    Tok::Str(s)
                }
                Err(at) => {
                    return Err(err(
                        i + at,
                        "closing `\"`",
                        "malformed string literal".into(),
                    ))
                }
            }
        } else if c == '@' {
            i += 1;
            if src[i..].starts_with('#') {
                i += 1;
                let h = i;
                while i < src.len() && bytes[i].is_ascii_hexdigit() {
                    i += 1;
                }
                match crate::id::parse_anonymous_label(&src[h..i]) {
                    Some(id) if i - h == 32 => Tok::IdRef(ElementId(id)),
                    _ => {
                        return Err(err(
                            h,
                            "32 lowercase hex digits",
                            format!("`{}`", &src[h..i]),
                        ))
                    }
                }
            } else {
                let t = i;
                if !src[i..].starts_with(is_ident_start) {
                    return Err(err(i, "token after `@`", found_at(src, i)));
                }
                while i < src.len() && is_ident_char(bytes[i] as char) {
                    i += 1;
                }
                Tok::Ref(src[t..i].to_string())
            }
        } else {
            let two = src.get(i..i + 2).unwrap_or("");
            let (tok, len) = match two {
                ":=" => (Tok::Assign, 2),
                "!=" => (Tok::Ne, 2),
                "<=" => (Tok::Le, 2),
                ">=" => (Tok::Ge, 2),
                _ => match c {
                    '(' => (Tok::LParen, 1),
                    ')' => (Tok::RParen, 1),
                    '{' => (Tok::LBrace, 1),
                    '}' => (Tok::RBrace, 1),
                    ',' => (Tok::Comma, 1),
                    ';' => (Tok::Semi, 1),
                    ':' => (Tok::Colon, 1),
                    '.' => (Tok::Dot, 1),
                    '=' => (Tok::Eq, 1),
                    '<' => (Tok::Lt, 1),
                    '>' => (Tok::Gt, 1),
                    _ => return Err(err(i, "a token", found_at(src, i))),
                },
            };
            i += len;
            tok
        };
        out.push(Token {
            tok,
            span: Span::new(start, i),
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(src.len(), src.len()),
    });
    Ok(out)
}

fn found_at(src: &str, i: usize) -> String {
    match src[i..].chars().next() {
        Some(c) => format!("`{c}`"),
        None => "end of input".into(),
    }
}

/// Integer or real literal starting at `start` (optionally signed).
fn number(src: &str, start: usize) -> Result<(Tok, usize), ParseError> {
    let b = src.as_bytes();
    let mut i = start;
    if b[i] == b'-' {
        i += 1;
    }
    let digits = |mut i: usize| {
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        i
    };
    i = digits(i);
    let mut real = false;
    if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
        real = true;
        i = digits(i + 1);
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        let mut j = i + 1;
        if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
            j += 1;
        }
        if j < b.len() && b[j].is_ascii_digit() {
            real = true;
            i = digits(j);
        }
    }
    let text = &src[start..i];
    let bad = || ParseError::at(src, start, vec!["number".into()], format!("`{text}`"));
    let tok = if real {
        Tok::Real(text.parse().map_err(|_| bad())?)
    } else {
        Tok::Int(text.parse().map_err(|_| bad())?)
    };
    Ok((tok, i))
}
