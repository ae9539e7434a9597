// SPDX-License-Identifier: Apache-2.0

//! Choreography models: roles, message elements, gateways and the flows
//! between them.
//!
//! A model is parsed from a JSON document (see [`parse_model`]) and validated
//! strictly: every structural rule is checked at parse time, including
//! reachability of every element from the start element. A validated model is
//! immutable and can be shared freely.

mod condition;
mod document;
mod transform;
mod validate;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use condition::{Comparator, ConditionExpr};
pub use document::{parse_model, serialize_model};
pub use transform::{reassign_senders, replicate_model};
pub use validate::validate_model;

/// Errors produced while reading or validating a model.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("validation error at `{element}`: {reason}")]
    Validation { element: String, reason: String },
}

impl ModelError {
    pub(crate) fn invalid(element: impl Into<String>, reason: impl Into<String>) -> Self {
        ModelError::Validation { element: element.into(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ElementKind {
    Message,
    XorSplit,
    XorJoin,
    AndSplit,
    AndJoin,
}

impl ElementKind {
    pub fn is_gateway(self) -> bool {
        !matches!(self, ElementKind::Message)
    }

    pub fn is_split(self) -> bool {
        matches!(self, ElementKind::XorSplit | ElementKind::AndSplit)
    }

    pub fn is_join(self) -> bool {
        matches!(self, ElementKind::XorJoin | ElementKind::AndJoin)
    }

    pub fn code(self) -> u8 {
        match self {
            ElementKind::Message => 0,
            ElementKind::XorSplit => 1,
            ElementKind::XorJoin => 2,
            ElementKind::AndSplit => 3,
            ElementKind::AndJoin => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => ElementKind::Message,
            1 => ElementKind::XorSplit,
            2 => ElementKind::XorJoin,
            3 => ElementKind::AndSplit,
            4 => ElementKind::AndJoin,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValueType {
    Bool,
    Int,
    String,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Bool => "BOOL",
            ValueType::Int => "INT",
            ValueType::String => "STRING",
        })
    }
}

/// A typed public value, as carried by message variables and condition
/// literals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Bool(_) => ValueType::Bool,
            Value::Int(_) => ValueType::Int,
            Value::Str(_) => ValueType::String,
        }
    }

    /// Parses `text` as a value of the given type (`true`, `42`, `hello`).
    pub fn parse_as(text: &str, ty: ValueType) -> Option<Value> {
        match ty {
            ValueType::Bool => match text {
                "true" => Some(Value::Bool(true)),
                "false" => Some(Value::Bool(false)),
                _ => None,
            },
            ValueType::Int => text.parse().ok().map(Value::Int),
            ValueType::String => Some(Value::Str(text.to_string())),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    pub value_type: ValueType,
    pub confidential: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BranchCondition {
    Expr(ConditionExpr),
    Default,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub condition: BranchCondition,
    pub next: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub id: String,
    pub kind: ElementKind,
    pub name: String,
    /// Sending role; `Some` exactly for messages.
    pub sender: Option<String>,
    pub receiver: Option<String>,
    pub variables: Vec<VariableDecl>,
    /// Routing branches; only populated on exclusive splits.
    pub branches: Vec<Branch>,
}

impl Element {
    pub fn is_message(&self) -> bool {
        self.kind == ElementKind::Message
    }

    /// True when the message carries at least one confidential variable.
    pub fn is_confidential(&self) -> bool {
        self.variables.iter().any(|v| v.confidential)
    }

    pub fn public_variables(&self) -> impl Iterator<Item = &VariableDecl> {
        self.variables.iter().filter(|v| !v.confidential)
    }

    pub fn variable(&self, name: &str) -> Option<&VariableDecl> {
        self.variables.iter().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Flow {
    pub from: String,
    pub to: String,
}

impl Flow {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Flow { from: from.into(), to: to.into() }
    }
}

/// A validated choreography.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoreographyModel {
    pub id: String,
    pub roles: BTreeSet<String>,
    pub elements: Vec<Element>,
    pub flows: Vec<Flow>,
    pub start: String,
}

impl ChoreographyModel {
    pub fn element(&self, id: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn messages(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter().filter(|e| e.is_message())
    }

    pub fn gateways(&self) -> impl Iterator<Item = &Element> {
        self.elements.iter().filter(|e| e.kind.is_gateway())
    }

    pub fn confidential_messages(&self) -> impl Iterator<Item = &Element> {
        self.messages().filter(|e| e.is_confidential())
    }

    pub fn successors(&self, id: &str) -> Vec<&str> {
        self.flows.iter().filter(|f| f.from == id).map(|f| f.to.as_str()).collect()
    }

    pub fn predecessors(&self, id: &str) -> Vec<&str> {
        self.flows.iter().filter(|f| f.to == id).map(|f| f.from.as_str()).collect()
    }

    /// Elements without outgoing flows.
    pub fn terminals(&self) -> Vec<&str> {
        let sources: BTreeSet<&str> = self.flows.iter().map(|f| f.from.as_str()).collect();
        self.elements
            .iter()
            .map(|e| e.id.as_str())
            .filter(|id| !sources.contains(id))
            .collect()
    }

    /// Declared type and confidentiality of every variable name in the model.
    pub fn variable_table(&self) -> BTreeMap<&str, &VariableDecl> {
        let mut table = BTreeMap::new();
        for decl in self.messages().flat_map(|m| m.variables.iter()) {
            table.entry(decl.name.as_str()).or_insert(decl);
        }
        table
    }
}

/// Ids of elements that cannot be reached from the start element by
/// following flows, in declaration order.
pub fn validate_reachability(model: &ChoreographyModel) -> Vec<String> {
    let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for flow in &model.flows {
        adjacency.entry(flow.from.as_str()).or_default().push(flow.to.as_str());
    }
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    if model.element(&model.start).is_some() {
        seen.insert(model.start.as_str());
        queue.push_back(model.start.as_str());
    }
    while let Some(id) = queue.pop_front() {
        for &next in adjacency.get(id).map(Vec::as_slice).unwrap_or_default() {
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    model
        .elements
        .iter()
        .filter(|e| !seen.contains(e.id.as_str()))
        .map(|e| e.id.clone())
        .collect()
}

pub(crate) fn is_role_name(name: &str) -> bool {
    !name.is_empty()
        && name.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_' || c == '-')
}
