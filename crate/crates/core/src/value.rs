//! Cell values stored in tables.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A single nullable cell value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Null,
    Int(i64),
    Real(f64),
    Text(String),
}

impl Value {
    /// Parses a raw CSV cell. Empty cells become `Null`; integers and finite
    /// reals are recognised, everything else is kept as text.
    pub fn parse_cell(raw: &str) -> Value {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Value::Null;
        }
        if let Ok(i) = trimmed.parse::<i64>() {
            return Value::Int(i);
        }
        match trimmed.parse::<f64>() {
            Ok(r) if r.is_finite() && looks_numeric(trimmed) => Value::Real(r),
            _ => Value::Text(raw.to_string()),
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Canonical number text: integers without a decimal point, reals in
    /// shortest round-trip form.
    pub fn canonical_number(&self) -> Option<String> {
        match self {
            Value::Int(i) => Some(i.to_string()),
            Value::Real(r) => Some(format!("{r}")),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Int(_) | Value::Real(_) => 1,
            Value::Text(_) => 2,
        }
    }

    /// SQL-style equality: `Null` equals nothing, numbers compare by value.
    pub fn sql_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => false,
            (Value::Text(a), Value::Text(b)) => a == b,
            (a, b) => match (a.as_f64(), b.as_f64()) {
                (Some(x), Some(y)) => x == y,
                _ => false,
            },
        }
    }
}

// "inf" and "nan" parse as f64 but stay text.
fn looks_numeric(s: &str) -> bool {
    s.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))
}

/// Total order used to sort query results: `Null < numbers < text`.
impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Null, Value::Null) => Ordering::Equal,
            (a, b) if a.rank() == 1 && b.rank() == 1 => {
                let (x, y) = (a.as_f64().unwrap(), b.as_f64().unwrap());
                x.total_cmp(&y).then_with(|| {
                    // Int(1) and Real(1.0) must not compare equal under Ord,
                    // otherwise Eq and Ord disagree.
                    matches!(a, Value::Real(_)).cmp(&matches!(b, Value::Real(_)))
                })
            }
            (a, b) => a.rank().cmp(&b.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Structural equality (bitwise for reals), consistent with `Ord`.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<f64> for Value {
    fn from(r: f64) -> Self {
        Value::Real(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_cells() {
        assert_eq!(Value::parse_cell(""), Value::Null);
        assert_eq!(Value::parse_cell("12"), Value::Int(12));
        assert_eq!(Value::parse_cell("1.5"), Value::Real(1.5));
        assert_eq!(Value::parse_cell("nan"), Value::Text("nan".into()));
        assert_eq!(Value::parse_cell("red gold"), Value::Text("red gold".into()));
    }

    #[test]
    fn sql_equality_ignores_numeric_kind() {
        assert!(Value::Int(3).sql_eq(&Value::Real(3.0)));
        assert!(!Value::Null.sql_eq(&Value::Null));
        assert_ne!(Value::Int(3), Value::Real(3.0));
    }

    #[test]
    fn canonical_numbers() {
        assert_eq!(Value::Int(12).canonical_number().unwrap(), "12");
        assert_eq!(Value::Real(0.1).canonical_number().unwrap(), "0.1");
        assert_eq!(Value::Real(2.5e-8).canonical_number().unwrap(), "0.000000025");
    }
}
