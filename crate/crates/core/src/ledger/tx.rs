// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::account::{verify_signature, Account, Address};
use super::hexser;

const TX_TAG: &[u8] = b"confetty/tx/v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub sender: Address,
    #[serde(with = "hexser")]
    pub sender_key: [u8; 32],
    pub target: String,
    pub function: String,
    #[serde(with = "hexser")]
    pub payload: Vec<u8>,
    pub nonce: u64,
    #[serde(with = "hexser")]
    pub signature: [u8; 64],
}

fn put(out: &mut Vec<u8>, field: &[u8]) {
    out.extend_from_slice(&(field.len() as u32).to_le_bytes());
    out.extend_from_slice(field);
}

impl Transaction {
    pub fn signed(account: &Account, target: &str, function: &str, payload: Vec<u8>, nonce: u64) -> Transaction {
        let mut tx = Transaction {
            sender: account.address(),
            sender_key: account.public_key(),
            target: target.to_string(),
            function: function.to_string(),
            payload,
            nonce,
            signature: [0; 64],
        };
        tx.signature = account.sign(&tx.signing_bytes());
        tx
    }

    /// Domain-tagged, length-prefixed encoding of every signed field.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut out = TX_TAG.to_vec();
        put(&mut out, &self.sender.0);
        put(&mut out, &self.sender_key);
        put(&mut out, self.target.as_bytes());
        put(&mut out, self.function.as_bytes());
        put(&mut out, &self.payload);
        out.extend_from_slice(&self.nonce.to_le_bytes());
        out
    }

    pub fn hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.signing_bytes());
        h.update(self.signature);
        h.finalize().into()
    }

    /// The key must belong to the sender address and sign the fields.
    pub fn verify(&self) -> bool {
        Address::from_public_key(&self.sender_key) == self.sender
            && verify_signature(&self.sender_key, &self.signing_bytes(), &self.signature)
    }

    /// Bytes charged as calldata.
    pub fn calldata_len(&self) -> usize {
        self.function.len() + self.payload.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn any_field_change_breaks_the_signature() {
        let a = Account::from_seed(b"a");
        let tx = Transaction::signed(&a, "process", "f", vec![1, 2, 3], 0);
        assert!(tx.verify());
        let mut t = tx.clone();
        t.payload[0] ^= 1;
        assert!(!t.verify());
        let mut t = tx.clone();
        t.nonce = 1;
        assert!(!t.verify());
        let mut t = tx.clone();
        t.signature[10] ^= 1;
        assert!(!t.verify());
        // Key swapped for another account's key: the address no longer matches.
        let mut t = tx;
        t.sender_key = Account::from_seed(b"b").public_key();
        assert!(!t.verify());
    }
}
