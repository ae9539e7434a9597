// SPDX-License-Identifier: Apache-2.0

//! Typed wrappers around the two contracts: argument builders for
//! transactions and decoders for read-only queries.

use std::collections::BTreeMap;

use crate::ledger::abi::{AbiReader, AbiWriter};
use crate::ledger::{Address, Ledger, LedgerError};
use crate::model::Value;

use super::attestation::Attestation;
use super::confidentiality::{decode_grant, decode_key_request, update_args};
use super::process::InstanceHeader;
use super::spec::ProcessSpec;
use super::{
    read_opt_value, decode_value, ConfidentialityRecord, ElementState, Grant, InstanceState, KeyRequestEntry,
    CONFIDENTIALITY_CONTRACT, PROCESS_CONTRACT,
};

fn malformed(what: &str) -> LedgerError {
    LedgerError::QueryFailed(format!("malformed `{what}` response"))
}

fn u64_of(bytes: &[u8], what: &str) -> Result<u64, LedgerError> {
    bytes.try_into().map(u64::from_le_bytes).map_err(|_| malformed(what))
}

fn address_of(bytes: &[u8], what: &str) -> Result<Address, LedgerError> {
    bytes.try_into().map(Address).map_err(|_| malformed(what))
}

fn digest_of(bytes: &[u8], what: &str) -> Result<[u8; 32], LedgerError> {
    bytes.try_into().map_err(|_| malformed(what))
}

/// A missing key surfaces as `NotFound: ...` from the contracts.
fn optional(r: Result<Vec<u8>, LedgerError>) -> Result<Option<Vec<u8>>, LedgerError> {
    match r {
        Ok(b) => Ok(Some(b)),
        Err(LedgerError::QueryFailed(m)) if m.starts_with("NotFound:") => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy)]
pub struct ProcessClient<'a> {
    ledger: &'a Ledger,
}

impl<'a> ProcessClient<'a> {
    pub fn new(ledger: &'a Ledger) -> Self {
        ProcessClient { ledger }
    }

    fn q(&self, function: &str, args: AbiWriter) -> Result<Vec<u8>, LedgerError> {
        self.ledger.query(PROCESS_CONTRACT, function, &args.finish())
    }

    pub fn register_spec_args(spec: &ProcessSpec, locator_digest: &[u8; 32]) -> Vec<u8> {
        AbiWriter::new().bytes(&spec.encode()).fixed(locator_digest).finish()
    }

    pub fn create_instance_args(spec_id: u64, bindings: &[(String, Address, Attestation)]) -> Vec<u8> {
        let mut w = AbiWriter::new().u64(spec_id).len(bindings.len());
        for (role, addr, att) in bindings {
            w = att.write(w.str(role).address(addr));
        }
        w.finish()
    }

    pub fn update_public_state_args(pid: &str, msg: &str, vars: &[(String, Value)]) -> Vec<u8> {
        update_args(pid, msg, vars)
    }

    pub fn spec_count(&self) -> Result<u64, LedgerError> {
        u64_of(&self.q("specCount", AbiWriter::new())?, "specCount")
    }

    pub fn spec(&self, id: u64) -> Result<ProcessSpec, LedgerError> {
        ProcessSpec::decode(&self.q("spec", AbiWriter::new().u64(id))?).map_err(|_| malformed("spec"))
    }

    pub fn spec_locator(&self, id: u64) -> Result<[u8; 32], LedgerError> {
        digest_of(&self.q("specLocator", AbiWriter::new().u64(id))?, "specLocator")
    }

    pub fn spec_by_model(&self, model_id: &str) -> Result<Option<u64>, LedgerError> {
        match self.q("specByModel", AbiWriter::new().str(model_id)) {
            Ok(b) => u64_of(&b, "specByModel").map(Some),
            Err(LedgerError::QueryFailed(m)) if m.starts_with("UnknownSpec:") => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn instance_count(&self) -> Result<u64, LedgerError> {
        u64_of(&self.q("instanceCount", AbiWriter::new())?, "instanceCount")
    }

    pub fn next_instance_id(&self) -> Result<String, LedgerError> {
        let b = self.q("nextInstanceId", AbiWriter::new())?;
        AbiReader::raw(&b).string().map_err(|_| malformed("nextInstanceId"))
    }

    /// Ids of all minted instances, oldest first.
    pub fn instance_ids(&self) -> Result<Vec<String>, LedgerError> {
        (0..self.instance_count()?)
            .map(|n| {
                let b = self.q("instanceId", AbiWriter::new().u64(n))?;
                AbiReader::raw(&b).string().map_err(|_| malformed("instanceId"))
            })
            .collect()
    }

    pub fn header(&self, pid: &str) -> Result<InstanceHeader, LedgerError> {
        InstanceHeader::decode(&self.q("header", AbiWriter::new().str(pid))?).ok_or_else(|| malformed("header"))
    }

    pub fn instance_state(&self, pid: &str) -> Result<InstanceState, LedgerError> {
        let b = self.q("instanceState", AbiWriter::new().str(pid))?;
        decode_instance_state(pid, &b).ok_or_else(|| malformed("instanceState"))
    }

    pub fn element_state(&self, pid: &str, element: &str) -> Result<ElementState, LedgerError> {
        let b = self.q("elementState", AbiWriter::new().str(pid).str(element))?;
        b.first().copied().and_then(ElementState::from_code).ok_or_else(|| malformed("elementState"))
    }

    pub fn public_var(&self, pid: &str, name: &str) -> Result<Option<Value>, LedgerError> {
        decode_value(&self.q("publicVar", AbiWriter::new().str(pid).str(name))?).map_err(|_| malformed("publicVar"))
    }

    pub fn is_participant(&self, pid: &str, who: &Address) -> Result<bool, LedgerError> {
        Ok(self.q("isParticipant", AbiWriter::new().str(pid).address(who))?.first() == Some(&1))
    }

    pub fn role_binding(&self, pid: &str, role: &str) -> Result<Address, LedgerError> {
        address_of(&self.q("roleBinding", AbiWriter::new().str(pid).str(role))?, "roleBinding")
    }
}

fn decode_instance_state(pid: &str, b: &[u8]) -> Option<InstanceState> {
    let mut r = AbiReader::raw(b);
    let spec_id = r.u64().ok()?;
    let started_at = r.u64().ok()?;
    let completed_at = match r.u8().ok()? {
        0 => None,
        1 => Some(r.u64().ok()?),
        _ => return None,
    };
    let mut element_states = BTreeMap::new();
    for _ in 0..r.count().ok()? {
        let id = r.string().ok()?;
        element_states.insert(id, ElementState::from_code(r.u8().ok()?)?);
    }
    let mut role_bindings = BTreeMap::new();
    for _ in 0..r.count().ok()? {
        let role = r.string().ok()?;
        role_bindings.insert(role, r.address().ok()?);
    }
    let mut join_counters = BTreeMap::new();
    for _ in 0..r.count().ok()? {
        let id = r.string().ok()?;
        join_counters.insert(id, r.u32().ok()?);
    }
    let mut public_vars = BTreeMap::new();
    for _ in 0..r.count().ok()? {
        let name = r.string().ok()?;
        if let Some(v) = read_opt_value(&mut r).ok()? {
            public_vars.insert(name, v);
        }
    }
    r.finish().ok()?;
    Some(InstanceState {
        instance_id: pid.to_string(),
        spec_id,
        element_states,
        public_vars,
        role_bindings,
        join_counters,
        started_at,
        completed_at,
    })
}

#[derive(Clone, Copy)]
pub struct ConfidentialityClient<'a> {
    ledger: &'a Ledger,
}

impl<'a> ConfidentialityClient<'a> {
    pub fn new(ledger: &'a Ledger) -> Self {
        ConfidentialityClient { ledger }
    }

    fn q(&self, function: &str, args: AbiWriter) -> Result<Vec<u8>, LedgerError> {
        self.ledger.query(CONFIDENTIALITY_CONTRACT, function, &args.finish())
    }

    pub fn store_policy_locator_args(pid: &str, locator_digest: &[u8; 32]) -> Vec<u8> {
        AbiWriter::new().str(pid).fixed(locator_digest).finish()
    }

    pub fn register_grant_args(att: &Attestation) -> Vec<u8> {
        att.write(AbiWriter::new()).finish()
    }

    pub fn record_confidential_args(
        pid: &str,
        msg: &str,
        locator_digest: &[u8; 32],
        payload_hash: &[u8; 32],
        vars: &[(String, Value)],
    ) -> Vec<u8> {
        let mut w = AbiWriter::new().str(pid).str(msg).fixed(locator_digest).fixed(payload_hash).len(vars.len());
        for (name, value) in vars {
            w = super::write_opt_value(w.str(name), Some(value));
        }
        w.finish()
    }

    pub fn log_key_request_args(attributes: &[String]) -> Vec<u8> {
        let mut w = AbiWriter::new().len(attributes.len());
        for a in attributes {
            w = w.str(a);
        }
        w.finish()
    }

    pub fn policy_locator(&self, pid: &str) -> Result<Option<[u8; 32]>, LedgerError> {
        optional(self.q("policyLocator", AbiWriter::new().str(pid)))?
            .map(|b| digest_of(&b, "policyLocator"))
            .transpose()
    }

    pub fn record(&self, pid: &str, msg: &str) -> Result<Option<ConfidentialityRecord>, LedgerError> {
        optional(self.q("record", AbiWriter::new().str(pid).str(msg)))?
            .map(|b| ConfidentialityRecord::decode(&b).ok_or_else(|| malformed("record")))
            .transpose()
    }

    pub fn grants(&self, who: &Address) -> Result<Vec<Grant>, LedgerError> {
        let n = u64_of(&self.q("grantCount", AbiWriter::new().address(who))?, "grantCount")?;
        (0..n)
            .map(|i| {
                let b = self.q("grant", AbiWriter::new().address(who).u64(i))?;
                let (att, block_number) = decode_grant(&b).ok_or_else(|| malformed("grant"))?;
                Ok(Grant { role: att.role, scope: att.scope, certifier: att.certifier, block_number })
            })
            .collect()
    }

    pub fn grantees(&self) -> Result<Vec<Address>, LedgerError> {
        let n = u64_of(&self.q("granteeCount", AbiWriter::new())?, "granteeCount")?;
        (0..n).map(|i| address_of(&self.q("grantee", AbiWriter::new().u64(i))?, "grantee")).collect()
    }

    pub fn key_log(&self) -> Result<Vec<KeyRequestEntry>, LedgerError> {
        let n = u64_of(&self.q("keyLogLength", AbiWriter::new())?, "keyLogLength")?;
        (0..n)
            .map(|i| decode_key_request(&self.q("keyLog", AbiWriter::new().u64(i))?).ok_or_else(|| malformed("keyLog")))
            .collect()
    }
}
