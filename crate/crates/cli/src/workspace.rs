// SPDX-License-Identifier: Apache-2.0

//! On-disk CLI state: `config.toml`, `chain.ndjson` and the content store.
//! Every command rebuilds the engine by replaying the chain, so there is no
//! other mutable state to keep in sync.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use confetty::bench::certifier_for;
use confetty::engine::{Engine, EngineConfig, EngineError};
use confetty::ledger::export::{read_chain, write_chain};
use confetty::ledger::Account;
use confetty::store::{BlobStore, FsStore};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::Failure;

const AUTHORITIES: usize = 4;

pub struct Workspace {
    root: PathBuf,
    pub config: EngineConfig,
    pub engine: Engine,
    seed: u64,
}

impl Workspace {
    /// Opens `root`, creating a fresh deterministic workspace from `seed`
    /// when it has no config yet.
    pub fn open(root: &Path, seed: u64) -> Result<Workspace, Failure> {
        let cfg_path = root.join("config.toml");
        let config = if cfg_path.exists() {
            EngineConfig::from_toml(&fs::read_to_string(&cfg_path)?)?
        } else {
            fs::create_dir_all(root)?;
            let cfg = fresh_config(seed);
            fs::write(&cfg_path, cfg.to_toml())?;
            cfg
        };
        let seed = config.seed.ok_or_else(|| Failure::new("Config", "workspace config must pin a seed"))?;
        let store_root = root.join("store");
        let store: Arc<dyn BlobStore> = Arc::new(FsStore::open(&store_root).map_err(EngineError::from)?);
        let chain = root.join("chain.ndjson");
        let engine = if chain.exists() {
            let blocks = read_chain(BufReader::new(fs::File::open(&chain)?))?;
            let authorities = config
                .configured_authorities()?
                .ok_or_else(|| Failure::new("Config", "workspace config must pin authority secrets"))?;
            Engine::recover(config.clone(), store, &blocks, authorities)?
        } else {
            Engine::with_store(config.clone(), store)?
        };
        Ok(Workspace { root: root.to_path_buf(), config, engine, seed })
    }

    /// Persists the chain; written to a temporary file first so a crash
    /// never leaves a truncated export behind.
    pub fn save(&self) -> Result<(), Failure> {
        let tmp = self.root.join("chain.ndjson.tmp");
        let mut f = fs::File::create(&tmp)?;
        write_chain(&self.engine.blocks(), &mut f)?;
        f.sync_all()?;
        fs::rename(tmp, self.root.join("chain.ndjson"))?;
        Ok(())
    }

    /// The signing account of a named actor.
    pub fn actor(&self, name: &str) -> Account {
        Account::from_seed(format!("{}/actor/{name}", self.seed).as_bytes())
    }

    pub fn certifier(&self) -> Account {
        certifier_for(self.seed)
    }
}

fn fresh_config(seed: u64) -> EngineConfig {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xa0a0);
    let secrets = (0..AUTHORITIES)
        .map(|_| {
            let mut s = [0u8; 32];
            rng.fill_bytes(&mut s);
            hex::encode(s)
        })
        .collect();
    let mut cfg = EngineConfig::deterministic(seed)
        .with_certifier(&certifier_for(seed).public_key())
        .with_authorities(AUTHORITIES);
    cfg.authorities.secrets = Some(secrets);
    // The store lives next to the config; the engine is handed an explicit
    // store, so the path is informational.
    cfg.store_root = Some(PathBuf::from("store"));
    cfg
}
