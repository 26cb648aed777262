use std::fmt;

/// Integration limit on the extended real line. Infinite limits select
/// structurally different closed forms, so they are never encoded as large
/// finite numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Strict order, treating the infinities as the extremes.
    pub fn lt(self, other: ExtReal) -> bool {
        match (self, other) {
            (ExtReal::NegInf, ExtReal::NegInf) | (ExtReal::PosInf, _) => false,
            (ExtReal::NegInf, _) | (_, ExtReal::PosInf) => true,
            (ExtReal::Finite(_), ExtReal::NegInf) => false,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a < b,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::Finite(v)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => write!(f, "+inf"),
        }
    }
}
