// SPDX-License-Identifier: Apache-2.0

//! The two on-chain state machines.
//!
//! The process contract acts as factory and proxy: it stores each compiled
//! choreography once and keeps one compact [`InstanceState`] per process
//! instance, enforcing who may send which message when. The confidentiality
//! contract stores policy locators, attestation-backed attribute grants,
//! records of confidential messages and the key-request log.

mod attestation;
mod client;
mod confidentiality;
mod process;
mod spec;

use std::collections::BTreeMap;
use std::fmt;

pub use attestation::{Attestation, AttestationScope};
pub use client::{ConfidentialityClient, ProcessClient};
pub use confidentiality::{ConfidentialityContract, ConfidentialityRecord, Grant, KeyRequestEntry};
pub use process::{InstanceHeader, ProcessContract};
pub use spec::{ProcessSpec, SpecBranch, SpecCondition, SpecElement, SpecVar};

use crate::ledger::abi::{AbiError, AbiReader, AbiWriter};
use crate::ledger::{Address, Revert};
use crate::model::{Value, ValueType};

pub const PROCESS_CONTRACT: &str = "process";
pub const CONFIDENTIALITY_CONTRACT: &str = "confidentiality";

/// Machine-readable revert categories. Reasons are rendered `Kind: detail`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RevertKind {
    BadArguments,
    UnknownFunction,
    InvalidSpec,
    DuplicateSpec,
    UnknownSpec,
    MissingRole,
    UnknownRole,
    DuplicateRole,
    UnattestedBinding,
    NotAParticipant,
    UnknownInstance,
    UnknownElement,
    NotAMessage,
    WrongSender,
    NotEnabled,
    ConfidentialVarInPublicUpdate,
    ConfidentialRecordRequired,
    UndeclaredVariable,
    DuplicateVariable,
    TypeMismatch,
    NoBranchMatched,
    UndefinedVariable,
    UntrustedCaller,
    NotConfidential,
    LocatorAlreadySet,
    BadAttestation,
    DuplicateGrant,
}

const ALL_KINDS: [RevertKind; 27] = [
    RevertKind::BadArguments,
    RevertKind::UnknownFunction,
    RevertKind::InvalidSpec,
    RevertKind::DuplicateSpec,
    RevertKind::UnknownSpec,
    RevertKind::MissingRole,
    RevertKind::UnknownRole,
    RevertKind::DuplicateRole,
    RevertKind::UnattestedBinding,
    RevertKind::NotAParticipant,
    RevertKind::UnknownInstance,
    RevertKind::UnknownElement,
    RevertKind::NotAMessage,
    RevertKind::WrongSender,
    RevertKind::NotEnabled,
    RevertKind::ConfidentialVarInPublicUpdate,
    RevertKind::ConfidentialRecordRequired,
    RevertKind::UndeclaredVariable,
    RevertKind::DuplicateVariable,
    RevertKind::TypeMismatch,
    RevertKind::NoBranchMatched,
    RevertKind::UndefinedVariable,
    RevertKind::UntrustedCaller,
    RevertKind::NotConfidential,
    RevertKind::LocatorAlreadySet,
    RevertKind::BadAttestation,
    RevertKind::DuplicateGrant,
];

impl RevertKind {
    pub fn name(self) -> &'static str {
        match self {
            RevertKind::BadArguments => "BadArguments",
            RevertKind::UnknownFunction => "UnknownFunction",
            RevertKind::InvalidSpec => "InvalidSpec",
            RevertKind::DuplicateSpec => "DuplicateSpec",
            RevertKind::UnknownSpec => "UnknownSpec",
            RevertKind::MissingRole => "MissingRole",
            RevertKind::UnknownRole => "UnknownRole",
            RevertKind::DuplicateRole => "DuplicateRole",
            RevertKind::UnattestedBinding => "UnattestedBinding",
            RevertKind::NotAParticipant => "NotAParticipant",
            RevertKind::UnknownInstance => "UnknownInstance",
            RevertKind::UnknownElement => "UnknownElement",
            RevertKind::NotAMessage => "NotAMessage",
            RevertKind::WrongSender => "WrongSender",
            RevertKind::NotEnabled => "NotEnabled",
            RevertKind::ConfidentialVarInPublicUpdate => "ConfidentialVarInPublicUpdate",
            RevertKind::ConfidentialRecordRequired => "ConfidentialRecordRequired",
            RevertKind::UndeclaredVariable => "UndeclaredVariable",
            RevertKind::DuplicateVariable => "DuplicateVariable",
            RevertKind::TypeMismatch => "TypeMismatch",
            RevertKind::NoBranchMatched => "NoBranchMatched",
            RevertKind::UndefinedVariable => "UndefinedVariable",
            RevertKind::UntrustedCaller => "UntrustedCaller",
            RevertKind::NotConfidential => "NotConfidential",
            RevertKind::LocatorAlreadySet => "LocatorAlreadySet",
            RevertKind::BadAttestation => "BadAttestation",
            RevertKind::DuplicateGrant => "DuplicateGrant",
        }
    }

    /// Recovers the kind from a receipt's revert reason.
    pub fn of_reason(reason: &str) -> Option<RevertKind> {
        let name = reason.split(':').next()?.trim();
        ALL_KINDS.into_iter().find(|k| k.name() == name)
    }

    pub fn revert(self, detail: impl fmt::Display) -> Revert {
        Revert::new(format!("{}: {detail}", self.name()))
    }
}

impl fmt::Display for RevertKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub(crate) fn bad_args(e: AbiError) -> Revert {
    RevertKind::BadArguments.revert(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementState {
    Inactive,
    Enabled,
    Completed,
}

impl ElementState {
    pub fn code(self) -> u8 {
        match self {
            ElementState::Inactive => 0,
            ElementState::Enabled => 1,
            ElementState::Completed => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => ElementState::Inactive,
            1 => ElementState::Enabled,
            2 => ElementState::Completed,
            _ => return None,
        })
    }
}

impl fmt::Display for ElementState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementState::Inactive => "INACTIVE",
            ElementState::Enabled => "ENABLED",
            ElementState::Completed => "COMPLETED",
        })
    }
}

/// Public on-chain state of one process instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceState {
    pub instance_id: String,
    pub spec_id: u64,
    pub element_states: BTreeMap<String, ElementState>,
    /// Only variables that have been written; declared-but-unset variables
    /// are absent.
    pub public_vars: BTreeMap<String, Value>,
    pub role_bindings: BTreeMap<String, Address>,
    pub join_counters: BTreeMap<String, u32>,
    pub started_at: u64,
    pub completed_at: Option<u64>,
}

impl InstanceState {
    pub fn is_completed(&self) -> bool {
        self.completed_at.is_some()
    }
}

pub(crate) fn value_type_code(t: ValueType) -> u8 {
    match t {
        ValueType::Bool => 1,
        ValueType::Int => 2,
        ValueType::String => 3,
    }
}

pub(crate) fn value_type_from_code(c: u8) -> Option<ValueType> {
    Some(match c {
        1 => ValueType::Bool,
        2 => ValueType::Int,
        3 => ValueType::String,
        _ => return None,
    })
}

/// Tag 0 marks an unset variable.
pub(crate) fn write_opt_value(w: AbiWriter, v: Option<&Value>) -> AbiWriter {
    match v {
        None => w.u8(0),
        Some(Value::Bool(b)) => w.u8(1).bool(*b),
        Some(Value::Int(i)) => w.u8(2).i64(*i),
        Some(Value::Str(s)) => w.u8(3).str(s),
    }
}

pub(crate) fn read_opt_value(r: &mut AbiReader<'_>) -> Result<Option<Value>, AbiError> {
    Ok(match r.u8()? {
        0 => None,
        1 => Some(Value::Bool(r.bool()?)),
        2 => Some(Value::Int(r.i64()?)),
        3 => Some(Value::Str(r.string()?)),
        _ => return Err(AbiError::Invalid("value tag")),
    })
}

pub(crate) fn encode_value(v: Option<&Value>) -> Vec<u8> {
    write_opt_value(AbiWriter::raw(), v).finish()
}

pub(crate) fn decode_value(bytes: &[u8]) -> Result<Option<Value>, AbiError> {
    let mut r = AbiReader::raw(bytes);
    let v = read_opt_value(&mut r)?;
    r.finish()?;
    Ok(v)
}
