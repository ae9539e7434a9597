// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::hexser;
use super::tx::Transaction;

const BLOCK_TAG: &[u8] = b"confetty/block/v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub number: u64,
    #[serde(with = "hexser")]
    pub previous_hash: [u8; 32],
    pub transactions: Vec<Transaction>,
    #[serde(with = "hexser")]
    pub block_hash: [u8; 32],
}

impl Block {
    pub fn genesis() -> Block {
        Block::seal(0, [0; 32], Vec::new())
    }

    pub fn seal(number: u64, previous_hash: [u8; 32], transactions: Vec<Transaction>) -> Block {
        let block_hash = compute_hash(number, &previous_hash, &transactions);
        Block { number, previous_hash, transactions, block_hash }
    }

    pub fn recompute_hash(&self) -> [u8; 32] {
        compute_hash(self.number, &self.previous_hash, &self.transactions)
    }
}

/// sha256(tag ‖ number ‖ previous hash ‖ transaction hashes).
pub fn compute_hash(number: u64, previous_hash: &[u8; 32], txs: &[Transaction]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(BLOCK_TAG);
    h.update(number.to_le_bytes());
    h.update(previous_hash);
    h.update((txs.len() as u32).to_le_bytes());
    for tx in txs {
        h.update(tx.hash());
    }
    h.finalize().into()
}

/// True iff block numbers are consecutive from 0, every block hash is
/// correct and linked to its predecessor, and every signature verifies.
pub fn verify_blocks(blocks: &[Block]) -> bool {
    let mut prev = [0u8; 32];
    for (i, b) in blocks.iter().enumerate() {
        if b.number != i as u64 || b.previous_hash != prev || b.recompute_hash() != b.block_hash {
            return false;
        }
        if !b.transactions.iter().all(Transaction::verify) {
            return false;
        }
        prev = b.block_hash;
    }
    true
}
