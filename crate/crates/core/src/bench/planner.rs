// SPDX-License-Identifier: Apache-2.0

//! Derives a loop-free run through a model: every XOR split takes its first
//! conditional branch, and the variables it tests are given values that make
//! that branch hold.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{BranchCondition, ChoreographyModel, Comparator, ConditionExpr, ElementKind, Value, ValueType};

use super::Step;

fn satisfying(c: &ConditionExpr) -> Value {
    match (&c.literal, c.comparator) {
        (v, Comparator::Eq | Comparator::Le | Comparator::Ge) => v.clone(),
        (Value::Int(i), Comparator::Lt) => Value::Int(i - 1),
        (Value::Int(i), Comparator::Gt | Comparator::Ne) => Value::Int(i + 1),
        (Value::Bool(b), _) => Value::Bool(!b),
        (Value::Str(s), _) => Value::Str(format!("{s}-other")),
    }
}

fn filler(name: &str, ty: ValueType) -> Value {
    match ty {
        ValueType::Bool => Value::Bool(true),
        ValueType::Int => Value::Int(1),
        ValueType::String => Value::Str(format!("{name}-value")),
    }
}

/// Messages in firing order plus the public values each one sends.
pub fn plan_path(model: &ChoreographyModel) -> Vec<(String, Vec<(String, Value)>)> {
    let mut wanted: BTreeMap<&str, Value> = BTreeMap::new();
    for g in model.gateways().filter(|g| g.kind == ElementKind::XorSplit) {
        if let Some(BranchCondition::Expr(c)) = g.branches.iter().map(|b| &b.condition).find(|c| **c != BranchCondition::Default) {
            wanted.entry(c.variable.as_str()).or_insert_with(|| satisfying(c));
        }
    }

    let order: BTreeMap<&str, usize> = model.elements.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    let mut enabled: BTreeSet<(usize, String)> = BTreeSet::from([(order[model.start.as_str()], model.start.clone())]);
    let mut joins: BTreeMap<String, usize> = BTreeMap::new();
    let mut vars: BTreeMap<String, Value> = BTreeMap::new();
    let mut plan = Vec::new();
    let budget = 4 * model.elements.len() + 4;

    while let Some((_, msg)) = enabled.pop_first() {
        assert!(plan.len() < budget, "planned path does not terminate");
        let m = model.element(&msg).expect("enabled elements exist");
        let sent: Vec<(String, Value)> = m
            .public_variables()
            .map(|v| (v.name.clone(), wanted.get(v.name.as_str()).cloned().unwrap_or_else(|| filler(&v.name, v.value_type))))
            .collect();
        vars.extend(sent.iter().cloned());
        plan.push((msg.clone(), sent));

        let mut work: Vec<String> = model.successors(&msg).into_iter().map(String::from).collect();
        while let Some(id) = work.pop() {
            let e = model.element(&id).expect("flows are validated");
            match e.kind {
                ElementKind::Message => {
                    enabled.insert((order[id.as_str()], id));
                }
                ElementKind::AndSplit | ElementKind::XorJoin => work.extend(model.successors(&id).into_iter().map(String::from)),
                ElementKind::AndJoin => {
                    let n = joins.entry(id.clone()).or_default();
                    *n += 1;
                    if *n == model.predecessors(&id).len() {
                        *n = 0;
                        work.extend(model.successors(&id).into_iter().map(String::from));
                    }
                }
                ElementKind::XorSplit => {
                    let taken = e
                        .branches
                        .iter()
                        .find(|b| match &b.condition {
                            BranchCondition::Expr(c) => vars.get(&c.variable).and_then(|v| c.evaluate(v)) == Some(true),
                            BranchCondition::Default => false,
                        })
                        .or_else(|| e.branches.iter().find(|b| b.condition == BranchCondition::Default))
                        .expect("validated splits always route");
                    work.extend(taken.next.iter().cloned());
                }
            }
        }
    }
    plan
}

/// Turns a planned path into script steps; confidential messages carry a
/// synthetic payload of `payload_bytes`.
pub fn path_steps(model: &ChoreographyModel, payload_bytes: usize) -> Vec<Step> {
    plan_path(model)
        .into_iter()
        .map(|(message, vars)| {
            let e = model.element(&message).expect("planned messages exist");
            let actor = e.sender.clone().expect("messages have senders");
            let vars = vars.into_iter().collect();
            if e.is_confidential() {
                Step::TransactConfidential { actor, message, payload_bytes, vars }
            } else {
                Step::TransactPublic { actor, message, vars }
            }
        })
        .collect()
}
