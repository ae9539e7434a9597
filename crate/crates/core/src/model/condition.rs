// SPDX-License-Identifier: Apache-2.0

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use super::{ModelError, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Eq => "==",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }

    /// Ordering comparators are only meaningful on integers.
    pub fn is_ordering(self) -> bool {
        !matches!(self, Comparator::Eq | Comparator::Ne)
    }

    pub fn code(self) -> u8 {
        match self {
            Comparator::Eq => 0,
            Comparator::Ne => 1,
            Comparator::Lt => 2,
            Comparator::Le => 3,
            Comparator::Gt => 4,
            Comparator::Ge => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Comparator::Eq,
            1 => Comparator::Ne,
            2 => Comparator::Lt,
            3 => Comparator::Le,
            4 => Comparator::Gt,
            5 => Comparator::Ge,
            _ => return None,
        })
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            Comparator::Eq => ord == Ordering::Equal,
            Comparator::Ne => ord != Ordering::Equal,
            Comparator::Lt => ord == Ordering::Less,
            Comparator::Le => ord != Ordering::Greater,
            Comparator::Gt => ord == Ordering::Greater,
            Comparator::Ge => ord != Ordering::Less,
        }
    }
}

/// `IDENT CMP LITERAL`, e.g. `accepted == true` or `temperature <= 37`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConditionExpr {
    pub variable: String,
    pub comparator: Comparator,
    pub literal: Value,
}

impl ConditionExpr {
    /// Evaluates the condition against the current value of its variable.
    /// Returns `None` when the value's type differs from the literal's.
    pub fn evaluate(&self, value: &Value) -> Option<bool> {
        let ord = match (value, &self.literal) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            _ => return None,
        };
        Some(self.comparator.holds(ord))
    }
}

impl fmt::Display for ConditionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.variable, self.comparator.as_str(), self.literal)
    }
}

impl FromStr for ConditionExpr {
    type Err = ModelError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |msg: &str| ModelError::Syntax(format!("condition `{text}`: {msg}"));
        let s = text.trim();

        let ident_len = s
            .char_indices()
            .find(|&(i, c)| !(c == '_' || c.is_ascii_alphanumeric()) || (i == 0 && c.is_ascii_digit()))
            .map_or(s.len(), |(i, _)| i);
        if ident_len == 0 {
            return Err(err("expected a variable name"));
        }
        let (variable, rest) = s.split_at(ident_len);
        let rest = rest.trim_start();

        let (comparator, rest) = ["==", "!=", "<=", ">=", "<", ">"]
            .iter()
            .find_map(|op| rest.strip_prefix(op).map(|r| (*op, r)))
            .ok_or_else(|| err("expected one of == != < <= > >="))?;
        let comparator = match comparator {
            "==" => Comparator::Eq,
            "!=" => Comparator::Ne,
            "<=" => Comparator::Le,
            ">=" => Comparator::Ge,
            "<" => Comparator::Lt,
            _ => Comparator::Gt,
        };

        let lit = rest.trim();
        let literal = if lit == "true" {
            Value::Bool(true)
        } else if lit == "false" {
            Value::Bool(false)
        } else if let Ok(i) = lit.parse::<i64>() {
            Value::Int(i)
        } else if lit.len() >= 2
            && ((lit.starts_with('"') && lit.ends_with('"')) || (lit.starts_with('\'') && lit.ends_with('\'')))
        {
            let inner = &lit[1..lit.len() - 1];
            if inner.contains(['"', '\'', '\\']) {
                return Err(err("quotes and escapes are not allowed inside string literals"));
            }
            Value::Str(inner.to_string())
        } else {
            return Err(err("expected a literal (true, false, integer or quoted string)"));
        };

        Ok(ConditionExpr { variable: variable.to_string(), comparator, literal })
    }
}
