use std::fmt;
use std::ops::{BitAnd, BitOr, Not};

use serde::{Deserialize, Serialize};

/// Strong Kleene truth value.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TriBool {
    False,
    Unknown,
    True,
}

impl TriBool {
    pub fn is_true(self) -> bool {
        self == TriBool::True
    }

    pub fn name(self) -> &'static str {
        match self {
            TriBool::True => "true",
            TriBool::False => "false",
            TriBool::Unknown => "unknown",
        }
    }
}

impl From<bool> for TriBool {
    fn from(b: bool) -> Self {
        if b {
            TriBool::True
        } else {
            TriBool::False
        }
    }
}

impl Not for TriBool {
    type Output = TriBool;

    fn not(self) -> TriBool {
        match self {
            TriBool::True => TriBool::False,
            TriBool::False => TriBool::True,
            TriBool::Unknown => TriBool::Unknown,
        }
    }
}

// With False < Unknown < True, conjunction is min and disjunction is max.
impl BitAnd for TriBool {
    type Output = TriBool;

    fn bitand(self, rhs: TriBool) -> TriBool {
        self.min(rhs)
    }
}

impl BitOr for TriBool {
    type Output = TriBool;

    fn bitor(self, rhs: TriBool) -> TriBool {
        self.max(rhs)
    }
}

impl fmt::Display for TriBool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
