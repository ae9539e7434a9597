// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use ed25519_dalek::{Signer, SigningKey, VerifyingKey};
use rand::{CryptoRng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

const SEED_TAG: &[u8] = b"confetty/account/v1";

/// First 20 bytes of SHA-256 over the public key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Address(pub [u8; 20]);

impl Address {
    pub fn from_public_key(pk: &[u8; 32]) -> Address {
        let digest = Sha256::digest(pk);
        let mut a = [0u8; 20];
        a.copy_from_slice(&digest[..20]);
        Address(a)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", hex::encode(self.0))
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid address `{0}`")]
pub struct AddressParseError(String);

impl FromStr for Address {
    type Err = AddressParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.strip_prefix("0x").unwrap_or(s);
        let mut a = [0u8; 20];
        hex::decode_to_slice(body, &mut a).map_err(|_| AddressParseError(s.to_string()))?;
        Ok(Address(a))
    }
}

impl Serialize for Address {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A key pair and its derived address.
#[derive(Clone)]
pub struct Account {
    key: SigningKey,
    address: Address,
}

impl fmt::Debug for Account {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Account").field("address", &self.address).finish_non_exhaustive()
    }
}

impl Account {
    pub fn from_signing_key(key: SigningKey) -> Account {
        let address = Address::from_public_key(key.verifying_key().as_bytes());
        Account { key, address }
    }

    /// Deterministic account for `seed`.
    pub fn from_seed(seed: &[u8]) -> Account {
        let mut h = Sha256::new();
        h.update(SEED_TAG);
        h.update(seed);
        Account::from_signing_key(SigningKey::from_bytes(&h.finalize().into()))
    }

    pub fn generate<R: RngCore + CryptoRng + ?Sized>(rng: &mut R) -> Account {
        let mut secret = [0u8; 32];
        rng.fill_bytes(&mut secret);
        Account::from_signing_key(SigningKey::from_bytes(&secret))
    }

    pub fn address(&self) -> Address {
        self.address
    }

    pub fn public_key(&self) -> [u8; 32] {
        self.key.verifying_key().to_bytes()
    }

    pub fn verifying_key(&self) -> VerifyingKey {
        self.key.verifying_key()
    }

    pub fn sign(&self, msg: &[u8]) -> [u8; 64] {
        self.key.sign(msg).to_bytes()
    }
}

/// Fresh random account, or a deterministic one when a seed is given.
pub fn create_account(seed: Option<&[u8]>) -> Account {
    match seed {
        Some(s) => Account::from_seed(s),
        None => Account::generate(&mut rand::rngs::OsRng),
    }
}

pub fn verify_signature(public_key: &[u8; 32], msg: &[u8], signature: &[u8; 64]) -> bool {
    VerifyingKey::from_bytes(public_key)
        .map(|vk| vk.verify_strict(msg, &ed25519_dalek::Signature::from_bytes(signature)).is_ok())
        .unwrap_or(false)
}
