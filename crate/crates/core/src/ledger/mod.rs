// SPDX-License-Identifier: Apache-2.0

//! A single-node simulated chain: signed transactions, one transaction per
//! block, deterministic gas metering and host-native contracts.

pub mod abi;
mod account;
mod block;
pub mod export;
mod gas;
mod hexser;
mod state;
mod tx;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use account::{create_account, verify_signature, Account, Address, AddressParseError};
pub use block::{verify_blocks, Block};
pub use gas::{slots, GasSchedule, SLOT_BYTES};
pub use state::{state_root, CallContext, Caller, Contract, ContractTable, QueryError, Revert, StateView, WorldState};
pub use tx::Transaction;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("transaction signature does not verify")]
    BadSignature,
    #[error("bad nonce: expected {expected}, got {got}")]
    BadNonce { expected: u64, got: u64 },
    #[error("unknown contract `{0}`")]
    UnknownContract(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("query failed: {0}")]
    QueryFailed(String),
    #[error("contract `{0}` is already deployed")]
    AlreadyDeployed(String),
    #[error("replay diverged at block {0}")]
    ReplayDiverged(u64),
    #[error("chain does not verify")]
    InvalidChain,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxStatus {
    Success,
    Reverted(String),
}

impl TxStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, TxStatus::Success)
    }
}

impl fmt::Display for TxStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TxStatus::Success => f.write_str("SUCCESS"),
            TxStatus::Reverted(r) => write!(f, "REVERTED({r})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Receipt {
    pub tx_hash: [u8; 32],
    pub function: String,
    pub block_number: u64,
    pub gas_used: u64,
    pub status: TxStatus,
    /// Return data of a successful call.
    pub output: Vec<u8>,
}

impl Receipt {
    pub fn revert_reason(&self) -> Option<&str> {
        match &self.status {
            TxStatus::Reverted(r) => Some(r),
            TxStatus::Success => None,
        }
    }
}

pub struct Ledger {
    blocks: Vec<Block>,
    receipts: Vec<Receipt>,
    state: WorldState,
    nonces: BTreeMap<Address, u64>,
    contracts: ContractTable,
    schedule: GasSchedule,
}

impl fmt::Debug for Ledger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Ledger")
            .field("height", &self.height())
            .field("contracts", &self.contracts.keys().collect::<Vec<_>>())
            .finish_non_exhaustive()
    }
}

impl Default for Ledger {
    fn default() -> Self {
        Ledger::new(GasSchedule::default())
    }
}

impl Ledger {
    /// A chain holding only the empty genesis block.
    pub fn new(schedule: GasSchedule) -> Ledger {
        Ledger {
            blocks: vec![Block::genesis()],
            receipts: Vec::new(),
            state: WorldState::new(),
            nonces: BTreeMap::new(),
            contracts: ContractTable::new(),
            schedule,
        }
    }

    /// Registers a contract under `id`. Deployment is host configuration
    /// rather than a transaction.
    pub fn deploy(&mut self, id: &str, contract: Arc<dyn Contract>) -> Result<(), LedgerError> {
        if self.contracts.contains_key(id) {
            return Err(LedgerError::AlreadyDeployed(id.to_string()));
        }
        self.contracts.insert(id.to_string(), contract);
        Ok(())
    }

    pub fn schedule(&self) -> &GasSchedule {
        &self.schedule
    }

    pub fn next_nonce(&self, sender: &Address) -> u64 {
        self.nonces.get(sender).copied().unwrap_or(0)
    }

    /// Validates, executes and seals `tx` into a new block. Reverted calls
    /// are still included and pay intrinsic gas; rejected ones are not.
    pub fn submit(&mut self, tx: Transaction) -> Result<Receipt, LedgerError> {
        if !tx.verify() {
            return Err(LedgerError::BadSignature);
        }
        let expected = self.next_nonce(&tx.sender);
        if tx.nonce != expected {
            return Err(LedgerError::BadNonce { expected, got: tx.nonce });
        }
        let contract =
            Arc::clone(self.contracts.get(&tx.target).ok_or_else(|| LedgerError::UnknownContract(tx.target.clone()))?);

        let block_number = self.blocks.len() as u64;
        let intrinsic = self.schedule.intrinsic(tx.calldata_len());
        let mut overlay = BTreeMap::new();
        let mut storage_gas = 0;
        let namespace = self.contracts.get_key_value(&tx.target).expect("checked above").0.clone();
        let result = {
            let mut ctx = CallContext::new(
                &self.state,
                &mut overlay,
                &mut storage_gas,
                &self.schedule,
                &self.contracts,
                &namespace,
                tx.sender,
                block_number,
            );
            contract.execute(&mut ctx, &tx.function, &tx.payload)
        };
        let (status, gas_used, output) = match result {
            Ok(out) => {
                self.state.extend(overlay);
                (TxStatus::Success, intrinsic + storage_gas, out)
            }
            Err(revert) => (TxStatus::Reverted(revert.reason), intrinsic, Vec::new()),
        };

        self.nonces.insert(tx.sender, expected + 1);
        let receipt =
            Receipt { tx_hash: tx.hash(), function: tx.function.clone(), block_number, gas_used, status, output };
        let prev = self.blocks.last().expect("genesis exists").block_hash;
        self.blocks.push(Block::seal(block_number, prev, vec![tx]));
        self.receipts.push(receipt.clone());
        Ok(receipt)
    }

    /// Read-only call against sealed state; costs nothing and appends nothing.
    pub fn query(&self, contract: &str, function: &str, args: &[u8]) -> Result<Vec<u8>, LedgerError> {
        let (id, c) =
            self.contracts.get_key_value(contract).ok_or_else(|| LedgerError::UnknownContract(contract.to_string()))?;
        c.query(&StateView::new(&self.state, &self.contracts, id), function, args).map_err(|e| match e {
            QueryError::UnknownFunction(f) => LedgerError::UnknownFunction(f),
            QueryError::Failed(m) => LedgerError::QueryFailed(m),
        })
    }

    pub fn verify_chain(&self) -> bool {
        verify_blocks(&self.blocks)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn receipts(&self) -> &[Receipt] {
        &self.receipts
    }

    /// Number of non-genesis blocks.
    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn state_root(&self) -> [u8; 32] {
        state_root(&self.state)
    }

    pub fn total_gas(&self) -> u64 {
        self.receipts.iter().map(|r| r.gas_used).sum()
    }

    /// Re-executes an exported chain from genesis on a fresh ledger with the
    /// given contracts, checking every block hash along the way.
    pub fn replay(
        schedule: GasSchedule,
        contracts: impl IntoIterator<Item = (String, Arc<dyn Contract>)>,
        blocks: &[Block],
    ) -> Result<Ledger, LedgerError> {
        if !verify_blocks(blocks) || blocks.first().is_some_and(|g| g != &Block::genesis()) {
            return Err(LedgerError::InvalidChain);
        }
        let mut ledger = Ledger::new(schedule);
        for (id, c) in contracts {
            ledger.deploy(&id, c)?;
        }
        for b in blocks.iter().skip(1) {
            for tx in &b.transactions {
                ledger.submit(tx.clone())?;
            }
            if ledger.blocks.last().map(|l| l.block_hash) != Some(b.block_hash) {
                return Err(LedgerError::ReplayDiverged(b.number));
            }
        }
        Ok(ledger)
    }
}
