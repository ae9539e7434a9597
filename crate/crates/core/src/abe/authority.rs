// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use hmac::{Hmac, Mac};
use rand::{CryptoRng, RngCore};
use sha2::Sha256;

use super::AbeError;
use crate::policy::{is_instance_id, AttributeSet};

const WRAP_TAG: &[u8] = b"confetty/attr/v1";

/// A set of attribute names an authority is responsible for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttributePattern {
    Exact(String),
    /// Every `PID<digits>` instance attribute (`PID*`).
    InstanceIds,
}

impl AttributePattern {
    pub fn matches(&self, attr: &str) -> bool {
        match self {
            AttributePattern::Exact(a) => a == attr,
            AttributePattern::InstanceIds => is_instance_id(attr),
        }
    }

    fn overlaps(&self, other: &AttributePattern) -> bool {
        match (self, other) {
            (AttributePattern::InstanceIds, AttributePattern::InstanceIds) => true,
            (AttributePattern::Exact(a), p) | (p, AttributePattern::Exact(a)) => p.matches(a),
        }
    }
}

impl std::str::FromStr for AttributePattern {
    type Err = AbeError;
    fn from_str(s: &str) -> Result<Self, AbeError> {
        if s == "PID*" {
            Ok(AttributePattern::InstanceIds)
        } else if crate::policy::is_attribute_name(s) && !s.contains('$') {
            Ok(AttributePattern::Exact(s.to_string()))
        } else {
            Err(AbeError::UnmanagedAttribute(s.to_string()))
        }
    }
}

impl fmt::Display for AttributePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttributePattern::Exact(a) => f.write_str(a),
            AttributePattern::InstanceIds => f.write_str("PID*"),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct AuthorityConfig {
    pub authority_id: String,
    master_secret: [u8; 32],
    pub managed_attributes: BTreeSet<AttributePattern>,
}

impl fmt::Debug for AuthorityConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AuthorityConfig")
            .field("authority_id", &self.authority_id)
            .field("managed_attributes", &self.managed_attributes)
            .finish_non_exhaustive()
    }
}

impl AuthorityConfig {
    pub fn new(authority_id: impl Into<String>, master_secret: [u8; 32]) -> Self {
        AuthorityConfig { authority_id: authority_id.into(), master_secret, managed_attributes: BTreeSet::new() }
    }

    pub fn manages(&self, attr: &str) -> bool {
        self.managed_attributes.iter().any(|p| p.matches(attr))
    }

    /// PRF(masterSecret, attribute).
    pub fn wrapping_key(&self, attr: &str) -> [u8; 32] {
        let mut mac = Hmac::<Sha256>::new_from_slice(&self.master_secret).expect("HMAC accepts any key length");
        mac.update(WRAP_TAG);
        mac.update(attr.as_bytes());
        mac.finalize().into_bytes().into()
    }
}

/// Creates `n` authorities with fresh master secrets and assigns them the
/// given `(pattern, authority index)` partition.
pub fn setup_authorities<R: RngCore + CryptoRng + ?Sized>(
    rng: &mut R,
    n: usize,
    partition: &[(AttributePattern, usize)],
) -> Result<Vec<AuthorityConfig>, AbeError> {
    let secrets = (0..n)
        .map(|_| {
            let mut s = [0u8; 32];
            rng.fill_bytes(&mut s);
            s
        })
        .collect();
    setup_with_secrets(secrets, partition)
}

pub fn setup_with_secrets(
    secrets: Vec<[u8; 32]>,
    partition: &[(AttributePattern, usize)],
) -> Result<Vec<AuthorityConfig>, AbeError> {
    if secrets.is_empty() {
        return Err(AbeError::NoAuthorities);
    }
    let mut configs: Vec<AuthorityConfig> = secrets
        .into_iter()
        .enumerate()
        .map(|(i, s)| AuthorityConfig::new(format!("authority-{i}"), s))
        .collect();
    for (pattern, idx) in partition {
        assign_attribute(&mut configs, pattern.clone(), *idx)?;
    }
    Ok(configs)
}

/// Adds `pattern` to authority `idx`. Re-adding it to the same authority is
/// a no-op; claiming it for a second authority is a conflict.
pub fn assign_attribute(
    configs: &mut [AuthorityConfig],
    pattern: AttributePattern,
    idx: usize,
) -> Result<(), AbeError> {
    if idx >= configs.len() {
        return Err(AbeError::UnknownAuthority(idx));
    }
    for (i, c) in configs.iter().enumerate() {
        if c.managed_attributes.iter().any(|p| p.overlaps(&pattern)) {
            if i == idx && c.managed_attributes.contains(&pattern) {
                return Ok(());
            }
            return Err(AbeError::PartitionConflict(pattern.to_string()));
        }
    }
    configs[idx].managed_attributes.insert(pattern);
    Ok(())
}

pub fn managing_authority<'a>(configs: &'a [AuthorityConfig], attr: &str) -> Option<&'a AuthorityConfig> {
    configs.iter().find(|c| c.manages(attr))
}

/// A user's merged decryption key: one wrapping key per granted attribute,
/// each contributed by the authority managing that attribute.
#[derive(Clone, PartialEq, Eq)]
pub struct AbKey {
    pub user_gid: String,
    pub attribute_secrets: BTreeMap<String, [u8; 32]>,
}

impl fmt::Debug for AbKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AbKey")
            .field("user_gid", &self.user_gid)
            .field("attributes", &self.attribute_secrets.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl AbKey {
    pub fn attributes(&self) -> AttributeSet {
        AttributeSet::new(self.attribute_secrets.keys().cloned()).expect("key attributes are concrete")
    }

    /// Merges the attribute secrets of another key part for the same user.
    pub fn merge(&mut self, other: AbKey) {
        self.attribute_secrets.extend(other.attribute_secrets);
    }
}

pub fn keygen(authorities: &[AuthorityConfig], user_gid: &str, attrs: &AttributeSet) -> Result<AbKey, AbeError> {
    let mut attribute_secrets = BTreeMap::new();
    for a in attrs.iter() {
        let auth = managing_authority(authorities, a).ok_or_else(|| AbeError::UnmanagedAttribute(a.to_string()))?;
        attribute_secrets.insert(a.to_string(), auth.wrapping_key(a));
    }
    Ok(AbKey { user_gid: user_gid.to_string(), attribute_secrets })
}
