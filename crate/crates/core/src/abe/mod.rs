// SPDX-License-Identifier: Apache-2.0

//! Multi-authority ciphertext-policy ABE, realized as a wrapped-share LSSS
//! key encapsulation.
//!
//! Each authority derives one symmetric wrapping key per attribute from its
//! master secret. Encryption splits a random secret `s` over the policy's
//! LSSS matrix and wraps share `i` under the key of row `i`'s attribute; the
//! payload is sealed under a key derived from `s`. A user holding wrapping
//! keys for a satisfying attribute set unwraps enough shares to rebuild `s`.
//!
//! This gives the functional access-control contract only. Users who pool
//! their wrapping keys can decrypt jointly: there is no collusion
//! resistance.

mod authority;
mod cipher;
pub mod field;
mod lsss;
pub mod wire;

pub use authority::{
    assign_attribute, keygen, managing_authority, setup_authorities, setup_with_secrets, AbKey, AttributePattern,
    AuthorityConfig,
};
pub use cipher::{decrypt, encrypt, AbeCiphertext};
pub use field::Fp;
pub use lsss::{compile_lsss, LsssMatrix};

use crate::policy::PolicyError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AbeError {
    #[error("attribute pattern `{0}` is claimed by two authorities")]
    PartitionConflict(String),
    #[error("no authority with index {0}")]
    UnknownAuthority(usize),
    #[error("at least one authority is required")]
    NoAuthorities,
    #[error("attribute `{0}` is not managed by any authority")]
    UnmanagedAttribute(String),
    #[error("key attributes do not satisfy the ciphertext policy")]
    PolicyNotSatisfied,
    #[error("ciphertext integrity check failed")]
    IntegrityFailure,
    #[error("malformed ciphertext: {0}")]
    Malformed(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}
