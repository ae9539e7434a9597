// SPDX-License-Identifier: Apache-2.0

//! World state, transaction overlays and the contract execution context.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::account::Address;
use super::gas::GasSchedule;

pub type WorldState = BTreeMap<String, Vec<u8>>;
pub type Overlay = BTreeMap<String, Vec<u8>>;
pub type ContractTable = BTreeMap<String, Arc<dyn Contract>>;

/// Hash over the sorted key/value entries.
pub fn state_root(state: &WorldState) -> [u8; 32] {
    let mut h = Sha256::new();
    for (k, v) in state {
        h.update((k.len() as u32).to_le_bytes());
        h.update(k.as_bytes());
        h.update((v.len() as u32).to_le_bytes());
        h.update(v);
    }
    h.finalize().into()
}

fn qualified(namespace: &str, key: &str) -> String {
    format!("{namespace}/{key}")
}

/// Why a contract call aborted. The reason is recorded in the receipt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Revert {
    pub reason: String,
}

impl Revert {
    pub fn new(reason: impl Into<String>) -> Self {
        Revert { reason: reason.into() }
    }
}

impl fmt::Display for Revert {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("{0}")]
    Failed(String),
}

/// A deterministic, host-native contract. Storage lives in the ledger and is
/// reached only through the context, namespaced by contract id.
pub trait Contract: Send + Sync {
    fn execute(&self, ctx: &mut CallContext<'_>, function: &str, args: &[u8]) -> Result<Vec<u8>, Revert>;
    fn query(&self, view: &StateView<'_>, function: &str, args: &[u8]) -> Result<Vec<u8>, QueryError>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Caller {
    Account(Address),
    Contract(String),
}

/// Read-only access to one contract's storage, seeing pending writes of the
/// current transaction when there is one.
pub struct StateView<'a> {
    base: &'a WorldState,
    overlay: Option<&'a Overlay>,
    namespace: &'a str,
    contracts: &'a ContractTable,
}

impl<'a> StateView<'a> {
    pub(crate) fn new(base: &'a WorldState, contracts: &'a ContractTable, namespace: &'a str) -> Self {
        StateView { base, overlay: None, namespace, contracts }
    }

    pub fn get(&self, key: &str) -> Option<&'a [u8]> {
        let k = qualified(self.namespace, key);
        self.overlay.and_then(|o| o.get(&k)).or_else(|| self.base.get(&k)).map(Vec::as_slice)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    /// Read-only call into another contract against the same snapshot.
    pub fn query(&self, contract: &str, function: &str, args: &[u8]) -> Result<Vec<u8>, QueryError> {
        let (id, target) = self
            .contracts
            .get_key_value(contract)
            .ok_or_else(|| QueryError::Failed(format!("unknown contract `{contract}`")))?;
        target.query(&StateView { base: self.base, overlay: self.overlay, namespace: id, contracts: self.contracts }, function, args)
    }
}

pub struct CallContext<'a> {
    base: &'a WorldState,
    overlay: &'a mut Overlay,
    gas_used: &'a mut u64,
    schedule: &'a GasSchedule,
    contracts: &'a ContractTable,
    namespace: &'a str,
    pub origin: Address,
    pub caller: Caller,
    pub block_number: u64,
}

impl<'a> CallContext<'a> {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        base: &'a WorldState,
        overlay: &'a mut Overlay,
        gas_used: &'a mut u64,
        schedule: &'a GasSchedule,
        contracts: &'a ContractTable,
        namespace: &'a str,
        origin: Address,
        block_number: u64,
    ) -> Self {
        CallContext {
            base,
            overlay,
            gas_used,
            schedule,
            contracts,
            namespace,
            origin,
            caller: Caller::Account(origin),
            block_number,
        }
    }

    pub fn namespace(&self) -> &str {
        self.namespace
    }

    pub fn get(&self, key: &str) -> Option<&[u8]> {
        let k = qualified(self.namespace, key);
        self.overlay.get(&k).or_else(|| self.base.get(&k)).map(Vec::as_slice)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    /// Writes a value, charging new-slot or overwrite gas per 32-byte slot.
    pub fn set(&mut self, key: &str, value: Vec<u8>) {
        let old = self.get(key).map(<[u8]>::len);
        *self.gas_used += self.schedule.store(old, value.len());
        self.overlay.insert(qualified(self.namespace, key), value);
    }

    pub fn view(&self) -> StateView<'_> {
        StateView { base: self.base, overlay: Some(self.overlay), namespace: self.namespace, contracts: self.contracts }
    }

    /// Calls another contract inside the same transaction. Its writes and gas
    /// join this transaction; a revert aborts the whole transaction.
    pub fn call(&mut self, contract: &str, function: &str, args: &[u8]) -> Result<Vec<u8>, Revert> {
        let (id, target) = self
            .contracts
            .get_key_value(contract)
            .ok_or_else(|| Revert::new(format!("UnknownContract: {contract}")))?;
        let target = Arc::clone(target);
        let caller = Caller::Contract(self.namespace.to_string());
        let mut inner = CallContext {
            base: self.base,
            overlay: &mut *self.overlay,
            gas_used: &mut *self.gas_used,
            schedule: self.schedule,
            contracts: self.contracts,
            namespace: id.as_str(),
            origin: self.origin,
            caller,
            block_number: self.block_number,
        };
        target.execute(&mut inner, function, args)
    }

    pub fn query(&self, contract: &str, function: &str, args: &[u8]) -> Result<Vec<u8>, QueryError> {
        self.view().query(contract, function, args)
    }
}
