//! Element identity.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Opaque 128-bit element identifier, unique within one store lifetime.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ElementId(pub u128);

impl ElementId {
    /// Lowercase, zero-padded 32-digit hex rendering.
    pub fn to_hex(self) -> String {
        format!("{:032x}", self.0)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

/// `true` if `s` is usable as a human token: `[A-Za-z_][A-Za-z0-9_-]*`, and
/// not a 32-digit lowercase hex string (which would read as an anonymous id).
pub fn is_valid_token(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    if !chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        return false;
    }
    !is_full_hex(s)
}

/// Labels used for anonymous elements in text documents: all lowercase hex
/// digits, and either exactly 32 digits or starting with a decimal digit.
pub fn parse_anonymous_label(s: &str) -> Option<u128> {
    if s.is_empty() || s.len() > 32 {
        return None;
    }
    if !s
        .bytes()
        .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
    {
        return None;
    }
    if s.len() != 32 && !s.as_bytes()[0].is_ascii_digit() {
        return None;
    }
    u128::from_str_radix(s, 16).ok()
}

fn is_full_hex(s: &str) -> bool {
    s.len() == 32
        && s.bytes()
            .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

/// Attribute and relation names: `[A-Za-z_][A-Za-z0-9_.-]*`.
pub fn is_valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}
