// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{parse_model, serialize_model, ChoreographyModel};
use crate::policy::PolicyAst;

use super::EngineError;

/// What the owner confirms at configuration: the model document and one
/// parametric policy per confidential message. Stored once in the content
/// store; its locator is what the chain remembers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyBundle {
    pub model: String,
    pub policies: BTreeMap<String, String>,
}

impl PolicyBundle {
    pub fn new(model: &ChoreographyModel, policies: &BTreeMap<String, PolicyAst>) -> Self {
        PolicyBundle {
            model: serialize_model(model),
            policies: policies.iter().map(|(k, p)| (k.clone(), p.to_string())).collect(),
        }
    }

    /// Canonical bytes: keys are sorted, so equal bundles hash equally.
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("bundle always serializes")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EngineError> {
        serde_json::from_slice(bytes).map_err(|e| EngineError::CorruptBundle(e.to_string()))
    }

    pub fn parse(&self) -> Result<(ChoreographyModel, BTreeMap<String, PolicyAst>), EngineError> {
        let model = parse_model(self.model.as_bytes())?;
        let policies = self
            .policies
            .iter()
            .map(|(k, p)| Ok((k.clone(), p.parse::<PolicyAst>()?)))
            .collect::<Result<_, EngineError>>()?;
        Ok((model, policies))
    }
}
