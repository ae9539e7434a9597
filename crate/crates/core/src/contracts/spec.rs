// SPDX-License-Identifier: Apache-2.0

//! Compact on-chain form of a choreography: elements addressed by index,
//! flows folded into successor lists, conditions pre-parsed.

use crate::ledger::abi::{AbiError, AbiReader, AbiWriter};
use crate::model::{BranchCondition, ChoreographyModel, Comparator, ConditionExpr, ElementKind, Value, ValueType};

use super::{read_opt_value, value_type_code, value_type_from_code, write_opt_value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecVar {
    pub name: String,
    pub value_type: ValueType,
    pub confidential: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecCondition {
    pub variable: String,
    pub comparator: Comparator,
    pub literal: Value,
}

impl SpecCondition {
    pub fn evaluate(&self, v: &Value) -> Option<bool> {
        ConditionExpr { variable: self.variable.clone(), comparator: self.comparator, literal: self.literal.clone() }
            .evaluate(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecBranch {
    /// `None` is the default branch.
    pub condition: Option<SpecCondition>,
    pub targets: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecElement {
    pub id: String,
    pub kind: ElementKind,
    /// Role indices; meaningful for messages only.
    pub sender: u32,
    pub receiver: u32,
    pub vars: Vec<SpecVar>,
    pub successors: Vec<u32>,
    pub incoming: u32,
    pub branches: Vec<SpecBranch>,
}

impl SpecElement {
    pub fn is_message(&self) -> bool {
        self.kind == ElementKind::Message
    }

    pub fn is_confidential(&self) -> bool {
        self.vars.iter().any(|v| v.confidential)
    }

    pub fn var(&self, name: &str) -> Option<&SpecVar> {
        self.vars.iter().find(|v| v.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessSpec {
    pub model_id: String,
    pub roles: Vec<String>,
    pub start: u32,
    pub elements: Vec<SpecElement>,
}

impl ProcessSpec {
    pub fn compile(model: &ChoreographyModel) -> ProcessSpec {
        let roles: Vec<String> = model.roles.iter().cloned().collect();
        let role_idx = |r: &Option<String>| {
            r.as_ref().and_then(|r| roles.iter().position(|x| x == r)).map_or(u32::MAX, |i| i as u32)
        };
        let index = |id: &str| model.elements.iter().position(|e| e.id == id).expect("validated model") as u32;
        let elements = model
            .elements
            .iter()
            .map(|e| SpecElement {
                id: e.id.clone(),
                kind: e.kind,
                sender: role_idx(&e.sender),
                receiver: role_idx(&e.receiver),
                vars: e
                    .variables
                    .iter()
                    .map(|v| SpecVar { name: v.name.clone(), value_type: v.value_type, confidential: v.confidential })
                    .collect(),
                successors: model.successors(&e.id).into_iter().map(index).collect(),
                incoming: model.predecessors(&e.id).len() as u32,
                branches: e
                    .branches
                    .iter()
                    .map(|b| SpecBranch {
                        condition: match &b.condition {
                            BranchCondition::Default => None,
                            BranchCondition::Expr(c) => Some(SpecCondition {
                                variable: c.variable.clone(),
                                comparator: c.comparator,
                                literal: c.literal.clone(),
                            }),
                        },
                        targets: b.next.iter().map(|t| index(t)).collect(),
                    })
                    .collect(),
            })
            .collect();
        ProcessSpec { model_id: model.id.clone(), roles, start: index(&model.start), elements }
    }

    pub fn element_index(&self, id: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.id == id)
    }

    pub fn role_index(&self, role: &str) -> Option<usize> {
        self.roles.iter().position(|r| r == role)
    }

    /// Type of a public variable declared anywhere in the spec.
    pub fn public_variables(&self) -> Vec<&SpecVar> {
        let mut seen = std::collections::BTreeSet::new();
        self.elements
            .iter()
            .flat_map(|e| e.vars.iter())
            .filter(|v| !v.confidential && seen.insert(v.name.as_str()))
            .collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = AbiWriter::raw().str(&self.model_id).len(self.roles.len());
        for r in &self.roles {
            w = w.str(r);
        }
        w = w.u32(self.start).len(self.elements.len());
        for e in &self.elements {
            w = w.str(&e.id).u8(e.kind.code());
            if e.is_message() {
                w = w.u32(e.sender).u32(e.receiver).len(e.vars.len());
                for v in &e.vars {
                    w = w.str(&v.name).u8(value_type_code(v.value_type)).bool(v.confidential);
                }
            }
            w = w.len(e.successors.len());
            for s in &e.successors {
                w = w.u32(*s);
            }
            w = w.u32(e.incoming);
            if e.kind == ElementKind::XorSplit {
                w = w.len(e.branches.len());
                for b in &e.branches {
                    w = match &b.condition {
                        None => w.u8(0),
                        Some(c) => write_opt_value(w.u8(1).str(&c.variable).u8(c.comparator.code()), Some(&c.literal)),
                    };
                    w = w.len(b.targets.len());
                    for t in &b.targets {
                        w = w.u32(*t);
                    }
                }
            }
        }
        w.finish()
    }

    /// Decodes and bounds-checks every index.
    pub fn decode(bytes: &[u8]) -> Result<ProcessSpec, AbiError> {
        let mut r = AbiReader::raw(bytes);
        let model_id = r.string()?;
        let n_roles = r.count()?;
        let roles = (0..n_roles).map(|_| r.string()).collect::<Result<Vec<_>, _>>()?;
        let start = r.u32()?;
        let n = r.count()?;
        let mut elements = Vec::with_capacity(n);
        for _ in 0..n {
            let id = r.string()?;
            let kind = ElementKind::from_code(r.u8()?).ok_or(AbiError::Invalid("element kind"))?;
            let (mut sender, mut receiver, mut vars) = (u32::MAX, u32::MAX, Vec::new());
            if kind == ElementKind::Message {
                sender = r.u32()?;
                receiver = r.u32()?;
                if sender as usize >= n_roles || receiver as usize >= n_roles {
                    return Err(AbiError::Invalid("role index"));
                }
                let nv = r.count()?;
                for _ in 0..nv {
                    let name = r.string()?;
                    let value_type = value_type_from_code(r.u8()?).ok_or(AbiError::Invalid("value type"))?;
                    vars.push(SpecVar { name, value_type, confidential: r.bool()? });
                }
            }
            let ns = r.count()?;
            let successors = (0..ns).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
            let incoming = r.u32()?;
            let mut branches = Vec::new();
            if kind == ElementKind::XorSplit {
                let nb = r.count()?;
                for _ in 0..nb {
                    let condition = match r.u8()? {
                        0 => None,
                        1 => {
                            let variable = r.string()?;
                            let comparator = Comparator::from_code(r.u8()?).ok_or(AbiError::Invalid("comparator"))?;
                            let literal = read_opt_value(&mut r)?.ok_or(AbiError::Invalid("literal"))?;
                            Some(SpecCondition { variable, comparator, literal })
                        }
                        _ => return Err(AbiError::Invalid("branch tag")),
                    };
                    let nt = r.count()?;
                    let targets = (0..nt).map(|_| r.u32()).collect::<Result<Vec<_>, _>>()?;
                    branches.push(SpecBranch { condition, targets });
                }
            }
            elements.push(SpecElement { id, kind, sender, receiver, vars, successors, incoming, branches });
        }
        r.finish()?;
        let in_range = |i: &u32| (*i as usize) < n;
        if !in_range(&start)
            || elements.iter().any(|e| {
                !e.successors.iter().all(in_range) || !e.branches.iter().flat_map(|b| &b.targets).all(in_range)
            })
        {
            return Err(AbiError::Invalid("element index"));
        }
        Ok(ProcessSpec { model_id, roles, start, elements })
    }
}
