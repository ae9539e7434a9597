// SPDX-License-Identifier: Apache-2.0

//! Companion contract for everything confidentiality-related: policy-bundle
//! locators, attribute grants, records of confidential messages, and the
//! key-request audit log. It never sees plaintext.
//!
//! ```text
//! loc/{pid}                      policy-bundle locator of the instance
//! grant/{addr}/count, /{n}       attestations registered by addr
//! grantmark/{addr}/{role}/{scope}
//! grantee/count, /{n}            addresses with at least one grant
//! rec/{pid}/{msg}                locator digest, payload hash, writer, block
//! keylog/count, /{n}             requester, block, attributes
//! ```

use std::collections::BTreeSet;

use crate::ledger::abi::{AbiReader, AbiWriter};
use crate::ledger::{Address, CallContext, Contract, QueryError, Revert, StateView};
use crate::model::{ElementKind, Value};

use super::attestation::{Attestation, AttestationScope};
use super::{bad_args, write_opt_value, RevertKind, PROCESS_CONTRACT};

type R = RevertKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfidentialityRecord {
    /// SHA-256 of the content-store locator of the ciphertext.
    pub locator_digest: [u8; 32],
    /// SHA-256 of the ciphertext bytes.
    pub payload_hash: [u8; 32],
    pub writer: Address,
    pub block_number: u64,
}

impl ConfidentialityRecord {
    fn encode(&self) -> Vec<u8> {
        AbiWriter::raw()
            .fixed(&self.locator_digest)
            .fixed(&self.payload_hash)
            .address(&self.writer)
            .u64(self.block_number)
            .finish()
    }

    pub(crate) fn decode(bytes: &[u8]) -> Option<Self> {
        let mut r = AbiReader::raw(bytes);
        let rec = ConfidentialityRecord {
            locator_digest: r.fixed(32).ok()?.try_into().ok()?,
            payload_hash: r.fixed(32).ok()?.try_into().ok()?,
            writer: r.address().ok()?,
            block_number: r.u64().ok()?,
        };
        r.finish().ok()?;
        Some(rec)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grant {
    pub role: String,
    pub scope: AttestationScope,
    pub certifier: [u8; 32],
    pub block_number: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyRequestEntry {
    pub requester: Address,
    pub block_number: u64,
    pub attributes: Vec<String>,
}

pub struct ConfidentialityContract {
    certifiers: BTreeSet<[u8; 32]>,
}

impl ConfidentialityContract {
    pub fn new(certifiers: impl IntoIterator<Item = [u8; 32]>) -> Self {
        ConfidentialityContract { certifiers: certifiers.into_iter().collect() }
    }
}

fn counter(ctx: &CallContext<'_>, key: &str) -> u64 {
    ctx.get(key).and_then(|b| b.try_into().ok()).map(u64::from_le_bytes).unwrap_or(0)
}

fn view_counter(view: &StateView<'_>, key: &str) -> u64 {
    view.get(key).and_then(|b| b.try_into().ok()).map(u64::from_le_bytes).unwrap_or(0)
}

/// Re-raises a failed cross-contract query as a revert, preserving the
/// `Kind: detail` reason produced by the other contract.
fn forward(e: QueryError) -> Revert {
    match e {
        QueryError::Failed(reason) => Revert::new(reason),
        QueryError::UnknownFunction(f) => R::UnknownFunction.revert(f),
    }
}

fn is_participant(ctx: &CallContext<'_>, pid: &str, who: &Address) -> Result<bool, Revert> {
    let out = ctx
        .query(PROCESS_CONTRACT, "isParticipant", &AbiWriter::new().str(pid).address(who).finish())
        .map_err(forward)?;
    Ok(out.first() == Some(&1))
}

impl ConfidentialityContract {
    fn store_policy_locator(&self, ctx: &mut CallContext<'_>, args: &[u8]) -> Result<Vec<u8>, Revert> {
        let mut r = AbiReader::new(args).map_err(bad_args)?;
        let pid = r.string().map_err(bad_args)?;
        let locator = r.fixed(32).map_err(bad_args)?.to_vec();
        r.finish().map_err(bad_args)?;
        if !is_participant(ctx, &pid, &ctx.origin)? {
            return Err(R::NotAParticipant.revert(ctx.origin));
        }
        let key = format!("loc/{pid}");
        if ctx.contains(&key) {
            return Err(R::LocatorAlreadySet.revert(&pid));
        }
        ctx.set(&key, locator);
        Ok(Vec::new())
    }

    fn register_grant(&self, ctx: &mut CallContext<'_>, args: &[u8]) -> Result<Vec<u8>, Revert> {
        let mut r = AbiReader::new(args).map_err(bad_args)?;
        let att = Attestation::read(&mut r).map_err(bad_args)?;
        r.finish().map_err(bad_args)?;
        let who = ctx.origin;
        if att.subject != who {
            return Err(R::BadAttestation.revert(format!("attestation names {}, not the sender", att.subject)));
        }
        if !self.certifiers.contains(&att.certifier) || !att.signature_valid() {
            return Err(R::BadAttestation.revert("untrusted certifier or invalid signature"));
        }
        if let AttestationScope::Instance(pid) = &att.scope {
            let bound = ctx
                .query(PROCESS_CONTRACT, "roleBinding", &AbiWriter::new().str(pid).str(&att.role).finish())
                .map_err(forward)?;
            if bound != who.0 {
                return Err(R::BadAttestation.revert(format!("{who} is not bound to {} in {pid}", att.role)));
            }
        }
        let mark = format!("grantmark/{who}/{}/{}", att.role, att.scope);
        if ctx.contains(&mark) {
            return Err(R::DuplicateGrant.revert(format!("{} / {}", att.role, att.scope)));
        }
        ctx.set(&mark, vec![1]);

        let count_key = format!("grant/{who}/count");
        let n = counter(ctx, &count_key);
        let entry = att.write(AbiWriter::raw()).u64(ctx.block_number).finish();
        ctx.set(&format!("grant/{who}/{n}"), entry);
        ctx.set(&count_key, (n + 1).to_le_bytes().to_vec());
        if n == 0 {
            let g = counter(ctx, "grantee/count");
            ctx.set(&format!("grantee/{g}"), who.0.to_vec());
            ctx.set("grantee/count", (g + 1).to_le_bytes().to_vec());
        }
        Ok(Vec::new())
    }

    fn record_confidential(&self, ctx: &mut CallContext<'_>, args: &[u8]) -> Result<Vec<u8>, Revert> {
        let mut r = AbiReader::new(args).map_err(bad_args)?;
        let pid = r.string().map_err(bad_args)?;
        let msg = r.string().map_err(bad_args)?;
        let locator_digest: [u8; 32] = r.fixed(32).map_err(bad_args)?.try_into().expect("32 bytes");
        let payload_hash: [u8; 32] = r.fixed(32).map_err(bad_args)?.try_into().expect("32 bytes");
        let n = r.count().map_err(bad_args)?;
        let mut vars = Vec::with_capacity(n);
        for _ in 0..n {
            let name = r.string().map_err(bad_args)?;
            let value = super::read_opt_value(&mut r)
                .map_err(bad_args)?
                .ok_or_else(|| R::BadArguments.revert(format!("variable `{name}` without a value")))?;
            vars.push((name, value));
        }
        r.finish().map_err(bad_args)?;

        let info = ctx
            .query(PROCESS_CONTRACT, "elementInfo", &AbiWriter::new().str(&pid).str(&msg).finish())
            .map_err(forward)?;
        let mut ir = AbiReader::raw(&info);
        let kind = ir.u8().ok().and_then(ElementKind::from_code);
        let confidential = ir.bool().unwrap_or(false);
        if kind != Some(ElementKind::Message) {
            return Err(R::NotAMessage.revert(&msg));
        }
        if !confidential {
            return Err(R::NotConfidential.revert(&msg));
        }

        // The process contract performs every control-flow and sender check;
        // any revert there aborts this record too.
        ctx.call(PROCESS_CONTRACT, "updatePublicState", &update_args(&pid, &msg, &vars))?;

        let record = ConfidentialityRecord { locator_digest, payload_hash, writer: ctx.origin, block_number: ctx.block_number };
        ctx.set(&format!("rec/{pid}/{msg}"), record.encode());
        Ok(Vec::new())
    }

    fn log_key_request(&self, ctx: &mut CallContext<'_>, args: &[u8]) -> Result<Vec<u8>, Revert> {
        let mut r = AbiReader::new(args).map_err(bad_args)?;
        let n = r.count().map_err(bad_args)?;
        let mut w = AbiWriter::raw().address(&ctx.origin).u64(ctx.block_number).len(n);
        for _ in 0..n {
            w = w.str(r.str().map_err(bad_args)?);
        }
        r.finish().map_err(bad_args)?;
        let i = counter(ctx, "keylog/count");
        ctx.set(&format!("keylog/{i}"), w.finish());
        ctx.set("keylog/count", (i + 1).to_le_bytes().to_vec());
        Ok(Vec::new())
    }
}

pub(crate) fn update_args(pid: &str, msg: &str, vars: &[(String, Value)]) -> Vec<u8> {
    let mut w = AbiWriter::new().str(pid).str(msg).len(vars.len());
    for (name, value) in vars {
        w = write_opt_value(w.str(name), Some(value));
    }
    w.finish()
}

pub(crate) fn decode_grant(bytes: &[u8]) -> Option<(Attestation, u64)> {
    let mut r = AbiReader::raw(bytes);
    let att = Attestation::read(&mut r).ok()?;
    let block = r.u64().ok()?;
    r.finish().ok()?;
    Some((att, block))
}

pub(crate) fn decode_key_request(bytes: &[u8]) -> Option<KeyRequestEntry> {
    let mut r = AbiReader::raw(bytes);
    let requester = r.address().ok()?;
    let block_number = r.u64().ok()?;
    let n = r.count().ok()?;
    let attributes = (0..n).map(|_| r.string().ok()).collect::<Option<Vec<_>>>()?;
    r.finish().ok()?;
    Some(KeyRequestEntry { requester, block_number, attributes })
}

impl Contract for ConfidentialityContract {
    fn execute(&self, ctx: &mut CallContext<'_>, function: &str, args: &[u8]) -> Result<Vec<u8>, Revert> {
        match function {
            "storePolicyLocator" => self.store_policy_locator(ctx, args),
            "registerGrant" => self.register_grant(ctx, args),
            "recordConfidential" => self.record_confidential(ctx, args),
            "logKeyRequest" => self.log_key_request(ctx, args),
            f => Err(R::UnknownFunction.revert(f)),
        }
    }

    fn query(&self, view: &StateView<'_>, function: &str, args: &[u8]) -> Result<Vec<u8>, QueryError> {
        let bad = |e: crate::ledger::abi::AbiError| QueryError::Failed(format!("{}: {e}", R::BadArguments));
        let mut r = AbiReader::new(args).map_err(bad)?;
        let missing = |what: String| QueryError::Failed(format!("NotFound: {what}"));
        match function {
            "policyLocator" => {
                let pid = r.string().map_err(bad)?;
                view.get(&format!("loc/{pid}")).map(<[u8]>::to_vec).ok_or_else(|| missing(pid))
            }
            "record" => {
                let pid = r.string().map_err(bad)?;
                let msg = r.string().map_err(bad)?;
                view.get(&format!("rec/{pid}/{msg}")).map(<[u8]>::to_vec).ok_or_else(|| missing(format!("{pid}/{msg}")))
            }
            "grantCount" => {
                let who = r.address().map_err(bad)?;
                Ok(view_counter(view, &format!("grant/{who}/count")).to_le_bytes().to_vec())
            }
            "grant" => {
                let who = r.address().map_err(bad)?;
                let n = r.u64().map_err(bad)?;
                view.get(&format!("grant/{who}/{n}")).map(<[u8]>::to_vec).ok_or_else(|| missing(format!("{who}#{n}")))
            }
            "granteeCount" => Ok(view_counter(view, "grantee/count").to_le_bytes().to_vec()),
            "grantee" => {
                let n = r.u64().map_err(bad)?;
                view.get(&format!("grantee/{n}")).map(<[u8]>::to_vec).ok_or_else(|| missing(format!("grantee #{n}")))
            }
            "keyLogLength" => Ok(view_counter(view, "keylog/count").to_le_bytes().to_vec()),
            "keyLog" => {
                let n = r.u64().map_err(bad)?;
                view.get(&format!("keylog/{n}")).map(<[u8]>::to_vec).ok_or_else(|| missing(format!("keylog #{n}")))
            }
            f => Err(QueryError::UnknownFunction(f.to_string())),
        }
    }
}
