// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::abe::{setup_with_secrets, AttributePattern, AuthorityConfig};
use crate::ledger::GasSchedule;

use super::EngineError;

/// Engine settings, usually read from a TOML file:
///
/// ```toml
/// seed = 7
/// first_instance = 476948
/// store_root = "store"
/// certifiers = ["9f1c…"]            # hex ed25519 public keys
///
/// [authorities]
/// count = 3
/// partition = { "PID*" = 0, "MINISTRY-INSPECTOR" = 2 }
///
/// [gas]
/// new_slot = 20000
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    /// Seeds every random choice (authority secrets, encryption nonces) for
    /// reproducible runs. Absent means OS entropy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_first_instance")]
    pub first_instance: u64,
    /// Content-store directory; absent means an in-memory store.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub store_root: Option<PathBuf>,
    #[serde(default)]
    pub certifiers: Vec<String>,
    #[serde(default)]
    pub authorities: AuthoritySettings,
    #[serde(default)]
    pub gas: GasSchedule,
}

fn default_first_instance() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuthoritySettings {
    pub count: usize,
    /// Attribute pattern → authority index. Attributes not listed here are
    /// assigned round-robin as deployments introduce them.
    #[serde(default)]
    pub partition: BTreeMap<String, usize>,
    /// Hex master secrets, one per authority. When absent they are drawn
    /// from the engine RNG.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secrets: Option<Vec<String>>,
}

impl Default for AuthoritySettings {
    fn default() -> Self {
        AuthoritySettings { count: 1, partition: BTreeMap::from([("PID*".to_string(), 0)]), secrets: None }
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            seed: None,
            first_instance: default_first_instance(),
            store_root: None,
            certifiers: Vec::new(),
            authorities: AuthoritySettings::default(),
            gas: GasSchedule::default(),
        }
    }
}

impl EngineConfig {
    pub fn deterministic(seed: u64) -> Self {
        EngineConfig { seed: Some(seed), ..EngineConfig::default() }
    }

    pub fn with_certifier(mut self, public_key: &[u8; 32]) -> Self {
        self.certifiers.push(hex::encode(public_key));
        self
    }

    pub fn with_authorities(mut self, count: usize) -> Self {
        self.authorities.count = count;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, EngineError> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| EngineError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    pub(crate) fn check(&self) -> Result<(), EngineError> {
        if self.authorities.count == 0 {
            return Err(EngineError::Config("at least one authority is required".into()));
        }
        self.certifier_keys()?;
        self.partition()?;
        if let Some(s) = &self.authorities.secrets {
            if s.len() != self.authorities.count {
                return Err(EngineError::Config(format!("{} secrets for {} authorities", s.len(), self.authorities.count)));
            }
        }
        self.authority_secrets()?;
        Ok(())
    }

    pub fn certifier_keys(&self) -> Result<Vec<[u8; 32]>, EngineError> {
        self.certifiers
            .iter()
            .map(|h| {
                let mut k = [0u8; 32];
                hex::decode_to_slice(h, &mut k).map_err(|_| EngineError::Config(format!("bad certifier key `{h}`")))?;
                Ok(k)
            })
            .collect()
    }

    /// The configured partition, with `PID*` pinned to authority 0 unless
    /// the file says otherwise.
    pub fn partition(&self) -> Result<Vec<(AttributePattern, usize)>, EngineError> {
        let mut out = Vec::new();
        let mut has_pid = false;
        for (pattern, &idx) in &self.authorities.partition {
            let p: AttributePattern =
                pattern.parse().map_err(|e| EngineError::Config(format!("partition `{pattern}`: {e}")))?;
            if idx >= self.authorities.count {
                return Err(EngineError::Config(format!("partition `{pattern}` names authority {idx}")));
            }
            has_pid |= p == AttributePattern::InstanceIds;
            out.push((p, idx));
        }
        if !has_pid {
            out.insert(0, (AttributePattern::InstanceIds, 0));
        }
        Ok(out)
    }

    /// Authorities rebuilt from the configured secrets and base partition,
    /// before any deployment has claimed its attributes. `None` when the
    /// secrets come from the RNG.
    pub fn configured_authorities(&self) -> Result<Option<Vec<AuthorityConfig>>, EngineError> {
        match self.authority_secrets()? {
            Some(secrets) => Ok(Some(setup_with_secrets(secrets, &self.partition()?)?)),
            None => Ok(None),
        }
    }

    pub(crate) fn authority_secrets(&self) -> Result<Option<Vec<[u8; 32]>>, EngineError> {
        let Some(secrets) = &self.authorities.secrets else { return Ok(None) };
        secrets
            .iter()
            .map(|h| {
                let mut k = [0u8; 32];
                hex::decode_to_slice(h, &mut k).map_err(|_| EngineError::Config("bad authority secret".into()))?;
                Ok(k)
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }
}
