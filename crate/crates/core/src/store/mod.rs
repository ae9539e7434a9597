// SPDX-License-Identifier: Apache-2.0

//! Content-addressed blob storage. Every read re-hashes the stored bytes, so
//! out-of-band modification is reported rather than served.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::RwLock;

use sha2::{Digest, Sha256};

const PREFIX: &str = "cf01";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no blob stored under {0}")]
    NotFound(ContentId),
    #[error("stored bytes for {0} no longer match their id")]
    TamperDetected(ContentId),
    #[error("invalid content id `{0}`")]
    InvalidId(String),
    #[error("storage failure: {0}")]
    StorageFailure(#[from] io::Error),
}

/// `cf01` followed by the hex SHA-256 digest of the content.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentId([u8; 32]);

impl ContentId {
    pub fn of(bytes: &[u8]) -> Self {
        ContentId(Sha256::digest(bytes).into())
    }

    pub fn from_digest(digest: [u8; 32]) -> Self {
        ContentId(digest)
    }

    pub fn digest(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Display for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{PREFIX}{}", hex::encode(self.0))
    }
}

impl fmt::Debug for ContentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentId({self})")
    }
}

impl FromStr for ContentId {
    type Err = StoreError;
    fn from_str(s: &str) -> Result<Self, StoreError> {
        let invalid = || StoreError::InvalidId(s.to_string());
        let hex_part = s.strip_prefix(PREFIX).ok_or_else(invalid)?;
        if hex_part.len() != 64 || hex_part.bytes().any(|b| b.is_ascii_uppercase()) {
            return Err(invalid());
        }
        let mut d = [0u8; 32];
        hex::decode_to_slice(hex_part, &mut d).map_err(|_| invalid())?;
        Ok(ContentId(d))
    }
}

pub trait BlobStore: Send + Sync {
    /// Persists `bytes`; idempotent.
    fn put(&self, bytes: &[u8]) -> Result<ContentId, StoreError>;
    /// Returns the bytes for `id` after verifying their hash.
    fn get(&self, id: &ContentId) -> Result<Vec<u8>, StoreError>;
    fn contains(&self, id: &ContentId) -> bool;
}

fn verified(id: &ContentId, bytes: Vec<u8>) -> Result<Vec<u8>, StoreError> {
    if ContentId::of(&bytes) == *id {
        Ok(bytes)
    } else {
        Err(StoreError::TamperDetected(*id))
    }
}

/// One file per blob under `<root>/<first two hex chars>/<id>`.
#[derive(Debug, Clone)]
pub struct FsStore {
    root: PathBuf,
}

impl FsStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(FsStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_of(&self, id: &ContentId) -> PathBuf {
        let name = id.to_string();
        self.root.join(&name[PREFIX.len()..PREFIX.len() + 2]).join(name)
    }
}

impl BlobStore for FsStore {
    fn put(&self, bytes: &[u8]) -> Result<ContentId, StoreError> {
        let id = ContentId::of(bytes);
        let path = self.path_of(&id);
        if path.exists() {
            return Ok(id);
        }
        let dir = path.parent().expect("blob paths have a parent");
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        // A concurrent writer of the same content may win the rename; both
        // files hold identical bytes.
        tmp.persist(&path).map_err(|e| StoreError::StorageFailure(e.error))?;
        Ok(id)
    }

    fn get(&self, id: &ContentId) -> Result<Vec<u8>, StoreError> {
        match fs::read(self.path_of(id)) {
            Ok(bytes) => verified(id, bytes),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(StoreError::NotFound(*id)),
            Err(e) => Err(e.into()),
        }
    }

    fn contains(&self, id: &ContentId) -> bool {
        self.path_of(id).exists()
    }
}

/// In-memory store for tests and benches. `tamper` simulates out-of-band
/// modification of a stored blob.
#[derive(Debug, Default)]
pub struct MemStore {
    blobs: RwLock<HashMap<ContentId, Vec<u8>>>,
}

impl MemStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.blobs.read().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn tamper(&self, id: &ContentId, f: impl FnOnce(&mut Vec<u8>)) -> bool {
        match self.blobs.write().expect("store lock").get_mut(id) {
            Some(b) => {
                f(b);
                true
            }
            None => false,
        }
    }
}

impl BlobStore for MemStore {
    fn put(&self, bytes: &[u8]) -> Result<ContentId, StoreError> {
        let id = ContentId::of(bytes);
        self.blobs.write().expect("store lock").entry(id).or_insert_with(|| bytes.to_vec());
        Ok(id)
    }

    fn get(&self, id: &ContentId) -> Result<Vec<u8>, StoreError> {
        let bytes = self.blobs.read().expect("store lock").get(id).cloned().ok_or(StoreError::NotFound(*id))?;
        verified(id, bytes)
    }

    fn contains(&self, id: &ContentId) -> bool {
        self.blobs.read().expect("store lock").contains_key(id)
    }
}
