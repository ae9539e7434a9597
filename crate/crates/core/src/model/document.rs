// SPDX-License-Identifier: Apache-2.0

//! JSON document format for choreography models.
//!
//! ```json
//! {
//!   "id": "xray",
//!   "roles": ["PATIENT", "RADIOLOGY"],
//!   "start": "prescription",
//!   "elements": [
//!     {"id": "prescription", "kind": "MESSAGE", "name": "Medical prescription",
//!      "sender": "PATIENT", "receiver": "RADIOLOGY",
//!      "vars": [{"name": "medicalPrescription", "type": "STRING", "confidential": true}]},
//!     {"id": "g", "kind": "XOR_SPLIT",
//!      "branches": [{"cond": "accepted == true", "next": ["a"]}, {"cond": "default", "next": ["b"]}]}
//!   ],
//!   "flows": [["prescription", "g"]]
//! }
//! ```

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{
    validate_model, Branch, BranchCondition, ChoreographyModel, Element, ElementKind, Flow, ModelError, ValueType,
    VariableDecl,
};

const DEFAULT_BRANCH: &str = "default";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    id: String,
    roles: Vec<String>,
    start: String,
    elements: Vec<RawElement>,
    flows: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    id: String,
    kind: ElementKind,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sender: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    receiver: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    vars: Vec<RawVar>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    branches: Vec<RawBranch>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVar {
    name: String,
    #[serde(rename = "type")]
    value_type: ValueType,
    #[serde(default)]
    confidential: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBranch {
    cond: String,
    next: Vec<String>,
}

/// Parses and strictly validates a model document.
pub fn parse_model(bytes: &[u8]) -> Result<ChoreographyModel, ModelError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ModelError::Syntax(format!("not UTF-8: {e}")))?;
    let raw: RawModel = serde_json::from_str(text).map_err(|e| ModelError::Syntax(e.to_string()))?;

    let mut roles = BTreeSet::new();
    for role in raw.roles {
        if !roles.insert(role.clone()) {
            return Err(ModelError::invalid(role, "role declared twice"));
        }
    }

    let elements = raw
        .elements
        .into_iter()
        .map(|e| {
            let branches = e
                .branches
                .into_iter()
                .map(|b| {
                    let condition = if b.cond.trim() == DEFAULT_BRANCH {
                        BranchCondition::Default
                    } else {
                        BranchCondition::Expr(b.cond.parse()?)
                    };
                    Ok(Branch { condition, next: b.next })
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            Ok(Element {
                id: e.id,
                kind: e.kind,
                name: e.name,
                sender: e.sender,
                receiver: e.receiver,
                variables: e
                    .vars
                    .into_iter()
                    .map(|v| VariableDecl { name: v.name, value_type: v.value_type, confidential: v.confidential })
                    .collect(),
                branches,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;

    let model = ChoreographyModel {
        id: raw.id,
        roles,
        elements,
        flows: raw.flows.into_iter().map(|(from, to)| Flow { from, to }).collect(),
        start: raw.start,
    };
    validate_model(&model)?;
    Ok(model)
}

/// Renders a model back into its document form.
pub fn serialize_model(model: &ChoreographyModel) -> String {
    let raw = RawModel {
        id: model.id.clone(),
        roles: model.roles.iter().cloned().collect(),
        start: model.start.clone(),
        elements: model
            .elements
            .iter()
            .map(|e| RawElement {
                id: e.id.clone(),
                kind: e.kind,
                name: e.name.clone(),
                sender: e.sender.clone(),
                receiver: e.receiver.clone(),
                vars: e
                    .variables
                    .iter()
                    .map(|v| RawVar { name: v.name.clone(), value_type: v.value_type, confidential: v.confidential })
                    .collect(),
                branches: e
                    .branches
                    .iter()
                    .map(|b| RawBranch {
                        cond: match &b.condition {
                            BranchCondition::Default => DEFAULT_BRANCH.to_string(),
                            BranchCondition::Expr(c) => c.to_string(),
                        },
                        next: b.next.clone(),
                    })
                    .collect(),
            })
            .collect(),
        flows: model.flows.iter().map(|f| (f.from.clone(), f.to.clone())).collect(),
    };
    serde_json::to_string_pretty(&raw).expect("model documents always serialize")
}
