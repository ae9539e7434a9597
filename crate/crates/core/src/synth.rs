// SPDX-License-Identifier: Apache-2.0

//! Synthetic choreographies with a chosen number of gateways, for the
//! gateway-scaling bench.
//!
//! The model is a chain of blocks between an opening and a closing
//! confidential message. Block `i` is either a parallel block (AND split,
//! two messages, AND join) or, alternately, an exclusive block (XOR split on
//! a flag set by the message before it, two messages, XOR join).

use std::collections::BTreeSet;

use crate::model::{
    validate_model, Branch, BranchCondition, ChoreographyModel, Comparator, ConditionExpr, Element, ElementKind, Flow,
    Value, ValueType, VariableDecl,
};

const ROLES: [&str; 3] = ["ALPHA", "BRAVO", "CHARLIE"];

fn message(id: String, from: usize, to: usize, variables: Vec<VariableDecl>) -> Element {
    Element {
        name: id.replace('_', " "),
        id,
        kind: ElementKind::Message,
        sender: Some(ROLES[from % 3].into()),
        receiver: Some(ROLES[to % 3].into()),
        variables,
        branches: vec![],
    }
}

fn gateway(id: String, kind: ElementKind, branches: Vec<Branch>) -> Element {
    Element { name: id.clone(), id, kind, sender: None, receiver: None, variables: vec![], branches }
}

fn var(name: String, value_type: ValueType, confidential: bool) -> VariableDecl {
    VariableDecl { name, value_type, confidential }
}

/// A valid model with exactly `gateways` gateways (rounded up to even).
pub fn gateway_model(gateways: usize) -> ChoreographyModel {
    let blocks = gateways.div_ceil(2);
    let mut elements = Vec::new();
    let mut flows = Vec::new();

    let flag = |i: usize| format!("go{i}");
    elements.push(message("open".into(), 0, 1, vec![var("brief".into(), ValueType::String, true)]));
    let mut last = "open".to_string();

    for i in 0..blocks {
        let (split, join) = (format!("g{i}_split"), format!("g{i}_join"));
        let (a, b) = (format!("m{i}_a"), format!("m{i}_b"));
        let exclusive = i % 2 == 1;
        // Both messages of a parallel block set the flag of the exclusive
        // block that follows it.
        let next_flag = (i + 1 < blocks && !exclusive).then(|| flag(i + 1));
        let vars_a = next_flag.iter().map(|f| var(f.clone(), ValueType::Bool, false)).collect();
        let vars_b = next_flag.iter().map(|f| var(f.clone(), ValueType::Bool, false)).collect();
        if exclusive {
            let cond = ConditionExpr { variable: flag(i), comparator: Comparator::Eq, literal: Value::Bool(true) };
            elements.push(gateway(
                split.clone(),
                ElementKind::XorSplit,
                vec![
                    Branch { condition: BranchCondition::Expr(cond), next: vec![a.clone()] },
                    Branch { condition: BranchCondition::Default, next: vec![b.clone()] },
                ],
            ));
        } else {
            elements.push(gateway(split.clone(), ElementKind::AndSplit, vec![]));
        }
        elements.push(message(a.clone(), i + 1, i + 2, vars_a));
        elements.push(message(b.clone(), i + 2, i, vars_b));
        elements.push(gateway(
            join.clone(),
            if exclusive { ElementKind::XorJoin } else { ElementKind::AndJoin },
            vec![],
        ));
        flows.extend([
            Flow::new(&last, &split),
            Flow::new(&split, &a),
            Flow::new(&split, &b),
            Flow::new(&a, &join),
            Flow::new(&b, &join),
        ]);
        last = join;
    }

    elements.push(message("close".into(), 1, 0, vec![var("verdict".into(), ValueType::String, true)]));
    flows.push(Flow::new(&last, "close"));

    let model = ChoreographyModel {
        id: format!("synth-g{}", blocks * 2),
        roles: ROLES.iter().map(|r| r.to_string()).collect::<BTreeSet<_>>(),
        elements,
        flows,
        start: "open".into(),
    };
    validate_model(&model).expect("synthetic models are valid by construction");
    model
}
