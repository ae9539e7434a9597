// SPDX-License-Identifier: Apache-2.0

//! Monotone attribute policies.
//!
//! Policies are `and`/`or` formulas over upper-case attribute names. The
//! token `$PID` stands for the process-instance attribute and is replaced by
//! [`instantiate_policy`] once the instance id is known.

mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::ChoreographyModel;

pub use parse::parse_policy;

pub const PID_PLACEHOLDER: &str = "$PID";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("invalid instance id `{0}` (expected PID followed by digits)")]
    InvalidInstanceId(String),
    #[error("policy still contains the $PID placeholder")]
    PlaceholderPresent,
    #[error("invalid attribute name `{0}`")]
    InvalidAttribute(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PolicyAst {
    Attr(String),
    And(Box<PolicyAst>, Box<PolicyAst>),
    Or(Box<PolicyAst>, Box<PolicyAst>),
}

impl PolicyAst {
    pub fn attr(name: impl Into<String>) -> Self {
        PolicyAst::Attr(name.into())
    }

    pub fn and(l: PolicyAst, r: PolicyAst) -> Self {
        PolicyAst::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: PolicyAst, r: PolicyAst) -> Self {
        PolicyAst::Or(Box::new(l), Box::new(r))
    }

    /// Attribute leaves in left-to-right order, duplicates included.
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit_leaves(&mut |a| out.push(a));
        out
    }

    pub fn attributes(&self) -> BTreeSet<&str> {
        self.leaves().into_iter().collect()
    }

    pub fn has_placeholder(&self) -> bool {
        self.leaves().contains(&PID_PLACEHOLDER)
    }

    fn visit_leaves<'a>(&'a self, f: &mut impl FnMut(&'a str)) {
        match self {
            PolicyAst::Attr(a) => f(a),
            PolicyAst::And(l, r) | PolicyAst::Or(l, r) => {
                l.visit_leaves(f);
                r.visit_leaves(f);
            }
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyAst::Attr(a) => f.write_str(a),
            _ => write!(f, "({self})"),
        }
    }
}

/// Canonical form: the root is bare and every binary child is parenthesized,
/// e.g. `MINISTRY-INSPECTOR or ($PID and (PATIENT or RADIOLOGY))`.
impl fmt::Display for PolicyAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyAst::Attr(a) => f.write_str(a),
            PolicyAst::And(l, r) | PolicyAst::Or(l, r) => {
                let op = if matches!(self, PolicyAst::And(..)) { "and" } else { "or" };
                l.fmt_child(f)?;
                write!(f, " {op} ")?;
                r.fmt_child(f)
            }
        }
    }
}

impl std::str::FromStr for PolicyAst {
    type Err = PolicyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_policy(s)
    }
}

pub(crate) fn is_attribute_name(name: &str) -> bool {
    !name.is_empty()
        && name.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || matches!(c, '$' | '_' | '-'))
        && (!name.contains('$') || name == PID_PLACEHOLDER)
}

/// A concrete set of attributes held by a user. Placeholders are rejected.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeSet(BTreeSet<String>);

impl AttributeSet {
    pub fn new<I, S>(attrs: I) -> Result<Self, PolicyError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = AttributeSet::default();
        for a in attrs {
            set.insert(a)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, attr: impl Into<String>) -> Result<bool, PolicyError> {
        let attr = attr.into();
        if !is_attribute_name(&attr) || attr.contains('$') {
            return Err(PolicyError::InvalidAttribute(attr));
        }
        Ok(self.0.insert(attr))
    }

    pub fn contains(&self, attr: &str) -> bool {
        self.0.contains(attr)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &AttributeSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn union(&self, other: &AttributeSet) -> AttributeSet {
        AttributeSet(self.0.union(&other.0).cloned().collect())
    }
}

impl fmt::Display for AttributeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a)?;
        }
        f.write_str("}")
    }
}

/// Builds one parametric policy per confidential message:
/// `A1 or … or An or ($PID and (SENDER or RECEIVER))`.
pub fn generate_policies(
    model: &ChoreographyModel,
    auditor_roles: &[String],
) -> Result<BTreeMap<String, PolicyAst>, PolicyError> {
    let auditors = auditor_roles
        .iter()
        .map(|a| {
            let a = a.trim().to_ascii_uppercase();
            if is_attribute_name(&a) && !a.contains('$') {
                Ok(a)
            } else {
                Err(PolicyError::InvalidAttribute(a))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut out = BTreeMap::new();
    for msg in model.confidential_messages() {
        let sender = msg.sender.clone().unwrap_or_default();
        let receiver = msg.receiver.clone().unwrap_or_default();
        let parties = if sender == receiver {
            PolicyAst::Attr(sender)
        } else {
            PolicyAst::or(PolicyAst::Attr(sender), PolicyAst::Attr(receiver))
        };
        let core = PolicyAst::and(PolicyAst::attr(PID_PLACEHOLDER), parties);
        let policy = match auditors.split_first() {
            None => core,
            Some((first, rest)) => {
                let audit = rest
                    .iter()
                    .fold(PolicyAst::attr(first.clone()), |acc, a| PolicyAst::or(acc, PolicyAst::attr(a.clone())));
                PolicyAst::or(audit, core)
            }
        };
        out.insert(msg.id.clone(), policy);
    }
    Ok(out)
}

pub fn is_instance_id(id: &str) -> bool {
    id.strip_prefix("PID").is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

/// Replaces every `$PID` leaf with `instance_id`.
pub fn instantiate_policy(policy: &PolicyAst, instance_id: &str) -> Result<PolicyAst, PolicyError> {
    if !is_instance_id(instance_id) {
        return Err(PolicyError::InvalidInstanceId(instance_id.to_string()));
    }
    fn subst(p: &PolicyAst, id: &str) -> PolicyAst {
        match p {
            PolicyAst::Attr(a) if a == PID_PLACEHOLDER => PolicyAst::attr(id),
            PolicyAst::Attr(a) => PolicyAst::attr(a.clone()),
            PolicyAst::And(l, r) => PolicyAst::and(subst(l, id), subst(r, id)),
            PolicyAst::Or(l, r) => PolicyAst::or(subst(l, id), subst(r, id)),
        }
    }
    Ok(subst(policy, instance_id))
}

pub fn evaluate(policy: &PolicyAst, attrs: &AttributeSet) -> Result<bool, PolicyError> {
    if policy.has_placeholder() {
        return Err(PolicyError::PlaceholderPresent);
    }
    fn eval(p: &PolicyAst, s: &AttributeSet) -> bool {
        match p {
            PolicyAst::Attr(a) => s.contains(a),
            PolicyAst::And(l, r) => eval(l, s) && eval(r, s),
            PolicyAst::Or(l, r) => eval(l, s) || eval(r, s),
        }
    }
    Ok(eval(policy, attrs))
}

/// Random monotone policies for tests and benches. Leaves are drawn from
/// `universe` with replacement.
pub fn random_policy<R: rand::Rng + ?Sized>(rng: &mut R, leaves: usize, universe: &[&str]) -> PolicyAst {
    assert!(leaves >= 1 && !universe.is_empty());
    if leaves == 1 {
        return PolicyAst::attr(universe[rng.gen_range(0..universe.len())]);
    }
    let left = rng.gen_range(1..leaves);
    let l = random_policy(rng, left, universe);
    let r = random_policy(rng, leaves - left, universe);
    if rng.gen_bool(0.5) {
        PolicyAst::and(l, r)
    } else {
        PolicyAst::or(l, r)
    }
}
