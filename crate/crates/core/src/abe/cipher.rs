// SPDX-License-Identifier: Apache-2.0

use chacha20poly1305::aead::{Aead, KeyInit, Payload};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use rand::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use super::authority::{managing_authority, AbKey, AuthorityConfig};
use super::field::Fp;
use super::lsss::{compile_lsss, LsssMatrix};
use super::{wire, AbeError};
use crate::policy::{parse_policy, PolicyAst};

const KEM_INFO: &[u8] = b"confetty/kem/v1";
const HEADER_TAG: &[u8] = b"confetty/abe-header/v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbeCiphertext {
    /// Canonical policy text.
    pub policy: String,
    pub lsss: LsssMatrix,
    /// Base nonce; row `i` uses `nonce ⊕ i`.
    pub nonce: [u8; 12],
    pub wrapped_shares: Vec<Vec<u8>>,
    pub encrypted_payload: Vec<u8>,
}

impl AbeCiphertext {
    pub fn to_bytes(&self) -> Vec<u8> {
        wire::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AbeError> {
        wire::decode(bytes)
    }

    fn header_digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(HEADER_TAG);
        h.update(wire::encode_header(self));
        h.finalize().into()
    }

    fn payload_aad(&self, header: &[u8; 32]) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(header);
        for s in &self.wrapped_shares {
            h.update((s.len() as u32).to_le_bytes());
            h.update(s);
        }
        h.finalize().into()
    }
}

fn row_nonce(base: &[u8; 12], row: usize) -> [u8; 12] {
    let mut n = *base;
    for (b, x) in n.iter_mut().zip((row as u64).to_le_bytes()) {
        *b ^= x;
    }
    n
}

fn share_aad(header: &[u8; 32], row: usize, label: &str) -> Vec<u8> {
    let mut aad = header.to_vec();
    aad.extend_from_slice(&(row as u32).to_le_bytes());
    aad.extend_from_slice(label.as_bytes());
    aad
}

fn payload_key(secret: Fp, header: &[u8; 32]) -> [u8; 32] {
    let mut okm = [0u8; 32];
    Hkdf::<Sha256>::new(Some(header), &secret.to_le_bytes())
        .expand(KEM_INFO, &mut okm)
        .expect("32 bytes is a valid HKDF output length");
    okm
}

fn seal(key: &[u8; 32], nonce: &[u8; 12], aad: &[u8], msg: &[u8]) -> Vec<u8> {
    ChaCha20Poly1305::new(Key::from_slice(key))
        .encrypt(Nonce::from_slice(nonce), Payload { msg, aad })
        .expect("in-memory encryption cannot fail")
}

fn open(key: &[u8; 32], nonce: &[u8; 12], aad: &[u8], msg: &[u8]) -> Result<Vec<u8>, AbeError> {
    ChaCha20Poly1305::new(Key::from_slice(key))
        .decrypt(Nonce::from_slice(nonce), Payload { msg, aad })
        .map_err(|_| AbeError::IntegrityFailure)
}

/// Encrypts `plaintext` so that exactly the attribute sets satisfying
/// `policy` can recover it.
pub fn encrypt<R: RngCore + CryptoRng + ?Sized>(
    rng: &mut R,
    authorities: &[AuthorityConfig],
    policy: &PolicyAst,
    plaintext: &[u8],
) -> Result<AbeCiphertext, AbeError> {
    if policy.has_placeholder() {
        return Err(AbeError::Policy(crate::policy::PolicyError::PlaceholderPresent));
    }
    let lsss = compile_lsss(policy);
    let mut wrapping_keys = Vec::with_capacity(lsss.row_count());
    for label in &lsss.labels {
        let auth =
            managing_authority(authorities, label).ok_or_else(|| AbeError::UnmanagedAttribute(label.clone()))?;
        wrapping_keys.push(auth.wrapping_key(label));
    }

    let v: Vec<Fp> = (0..lsss.width).map(|_| Fp::random(rng)).collect();
    let shares = lsss.shares(&v);
    let mut nonce = [0u8; 12];
    rng.fill_bytes(&mut nonce);

    let mut ct = AbeCiphertext {
        policy: policy.to_string(),
        lsss,
        nonce,
        wrapped_shares: Vec::new(),
        encrypted_payload: Vec::new(),
    };
    let header = ct.header_digest();
    ct.wrapped_shares = shares
        .iter()
        .enumerate()
        .map(|(i, share)| {
            seal(&wrapping_keys[i], &row_nonce(&nonce, i), &share_aad(&header, i, &ct.lsss.labels[i]), &share.to_le_bytes())
        })
        .collect();
    let aad = ct.payload_aad(&header);
    ct.encrypted_payload = seal(&payload_key(v[0], &header), &nonce, &aad, plaintext);
    Ok(ct)
}

/// Recovers the plaintext when the key's attributes satisfy the policy.
pub fn decrypt(key: &AbKey, ct: &AbeCiphertext) -> Result<Vec<u8>, AbeError> {
    let policy = parse_policy(&ct.policy).map_err(|_| AbeError::IntegrityFailure)?;
    if compile_lsss(&policy) != ct.lsss || ct.wrapped_shares.len() != ct.lsss.row_count() {
        return Err(AbeError::IntegrityFailure);
    }
    let header = ct.header_digest();

    let mut rows = Vec::new();
    let mut shares = Vec::new();
    for (i, label) in ct.lsss.labels.iter().enumerate() {
        let Some(wk) = key.attribute_secrets.get(label) else { continue };
        let raw = open(wk, &row_nonce(&ct.nonce, i), &share_aad(&header, i, label), &ct.wrapped_shares[i])?;
        let bytes: [u8; 8] = raw.try_into().map_err(|_| AbeError::IntegrityFailure)?;
        shares.push(Fp::from_canonical(u64::from_le_bytes(bytes)).ok_or(AbeError::IntegrityFailure)?);
        rows.push(i);
    }
    let coeffs = ct.lsss.reconstruction(&rows).ok_or(AbeError::PolicyNotSatisfied)?;
    let secret: Fp = coeffs.iter().zip(&shares).map(|(c, s)| *c * *s).sum();
    open(&payload_key(secret, &header), &ct.nonce, &ct.payload_aad(&header), &ct.encrypted_payload)
}
