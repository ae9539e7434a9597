// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use crate::ledger::abi::{AbiError, AbiReader, AbiWriter};
use crate::ledger::{verify_signature, Account, Address};

const ATTESTATION_TAG: &[u8] = b"confetty-attestation-v1";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttestationScope {
    /// Valid for one process instance only.
    Instance(String),
    /// Instance-free, used for auditor roles.
    Global,
}

impl fmt::Display for AttestationScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttestationScope::Instance(pid) => f.write_str(pid),
            AttestationScope::Global => f.write_str("GLOBAL"),
        }
    }
}

/// A certifier's signed claim that `subject` holds `role` within `scope`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attestation {
    pub subject: Address,
    pub role: String,
    pub scope: AttestationScope,
    pub certifier: [u8; 32],
    pub signature: [u8; 64],
}

fn signed_fields(subject: &Address, role: &str, scope: &AttestationScope) -> Vec<u8> {
    let w = AbiWriter::raw().fixed(ATTESTATION_TAG).address(subject).str(role);
    match scope {
        AttestationScope::Global => w.u8(0),
        AttestationScope::Instance(pid) => w.u8(1).str(pid),
    }
    .finish()
}

impl Attestation {
    pub fn issue(certifier: &Account, subject: Address, role: &str, scope: AttestationScope) -> Attestation {
        let signature = certifier.sign(&signed_fields(&subject, role, &scope));
        Attestation { subject, role: role.to_string(), scope, certifier: certifier.public_key(), signature }
    }

    /// Checks the signature only; whether the certifier is trusted is the
    /// caller's decision.
    pub fn signature_valid(&self) -> bool {
        verify_signature(&self.certifier, &signed_fields(&self.subject, &self.role, &self.scope), &self.signature)
    }

    pub fn certifier_address(&self) -> Address {
        Address::from_public_key(&self.certifier)
    }

    pub fn encode(&self) -> Vec<u8> {
        self.write(AbiWriter::raw()).finish()
    }

    pub fn write(&self, w: AbiWriter) -> AbiWriter {
        let w = w.address(&self.subject).str(&self.role);
        let w = match &self.scope {
            AttestationScope::Global => w.u8(0),
            AttestationScope::Instance(pid) => w.u8(1).str(pid),
        };
        w.fixed(&self.certifier).fixed(&self.signature)
    }

    pub fn read(r: &mut AbiReader<'_>) -> Result<Attestation, AbiError> {
        let subject = r.address()?;
        let role = r.string()?;
        let scope = match r.u8()? {
            0 => AttestationScope::Global,
            1 => AttestationScope::Instance(r.string()?),
            _ => return Err(AbiError::Invalid("attestation scope")),
        };
        let certifier = r.fixed(32)?.try_into().expect("32 bytes");
        let signature = r.fixed(64)?.try_into().expect("64 bytes");
        Ok(Attestation { subject, role, scope, certifier, signature })
    }

    pub fn decode(bytes: &[u8]) -> Result<Attestation, AbiError> {
        let mut r = AbiReader::raw(bytes);
        let a = Attestation::read(&mut r)?;
        r.finish()?;
        Ok(a)
    }
}
