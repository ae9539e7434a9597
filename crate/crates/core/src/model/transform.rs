// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use super::{validate_model, BranchCondition, ChoreographyModel, Element, Flow, ModelError};

fn suffixed(id: &str, copy: usize) -> String {
    format!("{id}.{copy}")
}

// Variable names admit no dots.
fn suffixed_var(name: &str, copy: usize) -> String {
    format!("{name}_{copy}")
}

/// Concatenates `k` copies of `model` in sequence.
///
/// Element ids of copy `i` (1-based) get the suffix `.i` and variable names
/// the suffix `_i`, so copies share no state. The terminal elements of each
/// copy flow into the start element of the next copy.
pub fn replicate_model(model: &ChoreographyModel, k: usize) -> ChoreographyModel {
    assert!(k >= 1, "replication factor must be positive");
    let terminals: Vec<String> = model.terminals().into_iter().map(str::to_string).collect();
    let mut elements = Vec::with_capacity(model.elements.len() * k);
    let mut flows = Vec::with_capacity(model.flows.len() * k + terminals.len() * (k - 1));

    for copy in 1..=k {
        for e in &model.elements {
            let mut e = e.clone();
            e.id = suffixed(&e.id, copy);
            for v in &mut e.variables {
                v.name = suffixed_var(&v.name, copy);
            }
            for b in &mut e.branches {
                for t in &mut b.next {
                    *t = suffixed(t, copy);
                }
                if let BranchCondition::Expr(c) = &mut b.condition {
                    c.variable = suffixed_var(&c.variable, copy);
                }
            }
            elements.push(e);
        }
        flows.extend(model.flows.iter().map(|f| Flow::new(suffixed(&f.from, copy), suffixed(&f.to, copy))));
        if copy > 1 {
            for t in &terminals {
                flows.push(Flow::new(suffixed(t, copy - 1), suffixed(&model.start, copy)));
            }
        }
    }

    let replicated = ChoreographyModel {
        id: if k == 1 { model.id.clone() } else { format!("{}x{k}", model.id) },
        roles: model.roles.clone(),
        elements,
        flows,
        start: suffixed(&model.start, 1),
    };
    debug_assert!(validate_model(&replicated).is_ok());
    replicated
}

/// Rewrites the role assignment so that exactly `count` distinct roles send
/// messages: message `i` (declaration order) is sent by `ACTOR-(i mod count + 1)`
/// and received by the next actor in the cycle.
pub fn reassign_senders(model: &ChoreographyModel, count: usize) -> Result<ChoreographyModel, ModelError> {
    let messages = model.messages().count();
    if count < 2 || count > messages {
        return Err(ModelError::invalid(
            &model.id,
            format!("sender count {count} outside [2, {messages}]"),
        ));
    }
    let role = |i: usize| format!("ACTOR-{}", i % count + 1);
    let mut index = 0;
    let elements: Vec<Element> = model
        .elements
        .iter()
        .map(|e| {
            let mut e = e.clone();
            if e.is_message() {
                e.sender = Some(role(index));
                e.receiver = Some(role(index + 1));
                index += 1;
            }
            e
        })
        .collect();
    let roles: BTreeSet<String> = (0..count).map(role).collect();
    let out = ChoreographyModel {
        id: format!("{}-p{count}", model.id),
        roles,
        elements,
        flows: model.flows.clone(),
        start: model.start.clone(),
    };
    validate_model(&out)?;
    Ok(out)
}
