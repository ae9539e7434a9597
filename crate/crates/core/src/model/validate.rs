// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::{
    is_role_name, validate_reachability, BranchCondition, ChoreographyModel, ElementKind, ModelError, ValueType,
    VariableDecl,
};

/// Checks every structural rule of a choreography model.
///
/// Validation is strict: unreachable elements, gateway-only cycles and models
/// without a terminal element are all rejected.
pub fn validate_model(model: &ChoreographyModel) -> Result<(), ModelError> {
    if model.id.trim().is_empty() {
        return Err(ModelError::invalid("<model>", "model id is empty"));
    }
    if model.roles.is_empty() {
        return Err(ModelError::invalid("<model>", "no roles declared"));
    }
    for role in &model.roles {
        if !is_role_name(role) {
            return Err(ModelError::invalid(role, "role names must match [A-Z0-9_-]+"));
        }
    }

    let mut ids = BTreeSet::new();
    for e in &model.elements {
        if e.id.is_empty() {
            return Err(ModelError::invalid("<element>", "empty element id"));
        }
        if !ids.insert(e.id.as_str()) {
            return Err(ModelError::invalid(&e.id, "duplicate element id"));
        }
    }
    let start = model
        .element(&model.start)
        .ok_or_else(|| ModelError::invalid(&model.start, "start element is not declared"))?;
    if !start.is_message() {
        return Err(ModelError::invalid(&start.id, "start element must be a MESSAGE"));
    }

    let mut seen_flows = BTreeSet::new();
    for flow in &model.flows {
        for end in [&flow.from, &flow.to] {
            if !ids.contains(end.as_str()) {
                return Err(ModelError::invalid(end, "flow references an undeclared element"));
            }
        }
        if !seen_flows.insert((flow.from.as_str(), flow.to.as_str())) {
            return Err(ModelError::invalid(&flow.from, format!("duplicate flow to `{}`", flow.to)));
        }
    }

    let mut outgoing: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut incoming: BTreeMap<&str, usize> = BTreeMap::new();
    for flow in &model.flows {
        outgoing.entry(&flow.from).or_default().insert(&flow.to);
        *incoming.entry(&flow.to).or_default() += 1;
    }

    let mut variables: BTreeMap<&str, &VariableDecl> = BTreeMap::new();
    for e in &model.elements {
        let outs = outgoing.get(e.id.as_str()).map_or(0, BTreeSet::len);
        let ins = incoming.get(e.id.as_str()).copied().unwrap_or(0);
        match e.kind {
            ElementKind::Message => {
                for (what, role) in [("sender", &e.sender), ("receiver", &e.receiver)] {
                    let role = role
                        .as_deref()
                        .ok_or_else(|| ModelError::invalid(&e.id, format!("message without {what}")))?;
                    if !model.roles.contains(role) {
                        return Err(ModelError::invalid(&e.id, format!("{what} role `{role}` is not declared")));
                    }
                }
                if !e.branches.is_empty() {
                    return Err(ModelError::invalid(&e.id, "only XOR_SPLIT gateways carry branches"));
                }
                let mut local = BTreeSet::new();
                for v in &e.variables {
                    if v.name.is_empty() || !v.name.chars().all(|c| c == '_' || c.is_ascii_alphanumeric()) {
                        return Err(ModelError::invalid(&e.id, format!("bad variable name `{}`", v.name)));
                    }
                    if !local.insert(v.name.as_str()) {
                        return Err(ModelError::invalid(&e.id, format!("variable `{}` declared twice", v.name)));
                    }
                    if let Some(prev) = variables.insert(&v.name, v) {
                        if prev != v {
                            return Err(ModelError::invalid(
                                &e.id,
                                format!("variable `{}` redeclared with a different type or visibility", v.name),
                            ));
                        }
                    }
                }
            }
            kind => {
                if e.sender.is_some() || e.receiver.is_some() {
                    return Err(ModelError::invalid(&e.id, "gateways declare no sender or receiver"));
                }
                if !e.variables.is_empty() {
                    return Err(ModelError::invalid(&e.id, "gateways declare no variables"));
                }
                if kind != ElementKind::XorSplit && !e.branches.is_empty() {
                    return Err(ModelError::invalid(&e.id, "only XOR_SPLIT gateways carry branches"));
                }
                if ins == 0 || outs == 0 {
                    return Err(ModelError::invalid(&e.id, "gateway needs incoming and outgoing flows"));
                }
                if kind.is_split() && outs < 2 {
                    return Err(ModelError::invalid(&e.id, "split gateway needs at least two outgoing flows"));
                }
                if kind.is_join() && ins < 2 {
                    return Err(ModelError::invalid(&e.id, "join gateway needs at least two incoming flows"));
                }
            }
        }
    }

    for e in model.elements.iter().filter(|e| e.kind == ElementKind::XorSplit) {
        if e.branches.len() < 2 {
            return Err(ModelError::invalid(&e.id, "XOR_SPLIT needs at least two branches"));
        }
        let defaults = e.branches.iter().filter(|b| b.condition == BranchCondition::Default).count();
        if defaults > 1 {
            return Err(ModelError::invalid(&e.id, "at most one DEFAULT branch"));
        }
        let successors = outgoing.get(e.id.as_str()).cloned().unwrap_or_default();
        let mut covered = BTreeSet::new();
        for branch in &e.branches {
            if branch.next.is_empty() {
                return Err(ModelError::invalid(&e.id, "branch without targets"));
            }
            for target in &branch.next {
                if !successors.contains(target.as_str()) {
                    return Err(ModelError::invalid(&e.id, format!("branch target `{target}` has no flow")));
                }
                if !covered.insert(target.as_str()) {
                    return Err(ModelError::invalid(&e.id, format!("`{target}` targeted by two branches")));
                }
            }
            if let BranchCondition::Expr(cond) = &branch.condition {
                let decl = variables.get(cond.variable.as_str()).ok_or_else(|| {
                    ModelError::invalid(&e.id, format!("condition on undeclared variable `{}`", cond.variable))
                })?;
                if decl.confidential {
                    return Err(ModelError::invalid(
                        &e.id,
                        format!("condition references confidential variable `{}`", cond.variable),
                    ));
                }
                if decl.value_type != cond.literal.value_type() {
                    return Err(ModelError::invalid(
                        &e.id,
                        format!("condition literal does not match {} variable `{}`", decl.value_type, cond.variable),
                    ));
                }
                if cond.comparator.is_ordering() && decl.value_type != ValueType::Int {
                    return Err(ModelError::invalid(&e.id, "ordering comparators apply to INT variables only"));
                }
            }
        }
        if covered.len() != successors.len() {
            return Err(ModelError::invalid(&e.id, "every outgoing flow must belong to a branch"));
        }
    }

    if model.terminals().is_empty() {
        return Err(ModelError::invalid("<model>", "model has no terminal element"));
    }
    if let Some(first) = validate_reachability(model).into_iter().next() {
        return Err(ModelError::invalid(first, "element is unreachable from the start element"));
    }
    if let Some(gw) = gateway_cycle(model) {
        return Err(ModelError::invalid(gw, "cycle made only of gateways"));
    }
    Ok(())
}

/// Finds a cycle that passes through gateways only; such cycles would route
/// control forever without any message being sent.
fn gateway_cycle(model: &ChoreographyModel) -> Option<String> {
    let gateways: BTreeSet<&str> = model.gateways().map(|g| g.id.as_str()).collect();
    let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for f in &model.flows {
        if gateways.contains(f.from.as_str()) && gateways.contains(f.to.as_str()) {
            adjacency.entry(&f.from).or_default().push(&f.to);
        }
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit<'a>(
        node: &'a str,
        adjacency: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
    ) -> Option<&'a str> {
        marks.insert(node, Mark::Open);
        for &next in adjacency.get(node).map(Vec::as_slice).unwrap_or_default() {
            match marks.get(next) {
                Some(Mark::Open) => return Some(next),
                Some(Mark::Done) => {}
                None => {
                    if let Some(hit) = visit(next, adjacency, marks) {
                        return Some(hit);
                    }
                }
            }
        }
        marks.insert(node, Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    for &g in &gateways {
        if !marks.contains_key(g) {
            if let Some(hit) = visit(g, &adjacency, &mut marks) {
                return Some(hit.to_string());
            }
        }
    }
    None
}
