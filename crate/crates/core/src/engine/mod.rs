// SPDX-License-Identifier: Apache-2.0

//! Process and confidentiality interfaces: the four functionalities
//! (configure, instantiate, transact, inspect) wired over the ledger, the two
//! contracts, the content store and the ABE authorities.
//!
//! Every chain write is signed by the acting user's own account; the engine
//! only assembles and submits. Attribute grants are mirrored engine-side from
//! the grants registered on chain and enforced when keys are requested.

mod bundle;
mod config;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub use bundle::PolicyBundle;
pub use config::{AuthoritySettings, EngineConfig};

use crate::abe::{
    self, assign_attribute, keygen, managing_authority, setup_authorities, setup_with_secrets, AbKey, AbeCiphertext,
    AbeError, AttributePattern, AuthorityConfig,
};
use crate::contracts::{
    Attestation, AttestationScope, ConfidentialityClient, ConfidentialityContract, ElementState, InstanceState,
    ProcessClient, ProcessContract, ProcessSpec, RevertKind, CONFIDENTIALITY_CONTRACT, PROCESS_CONTRACT,
};
use crate::ledger::{Account, Address, Block, Contract, Ledger, LedgerError, Receipt, Transaction};
use crate::model::{parse_model, ChoreographyModel, ModelError, Value};
use crate::policy::{evaluate, generate_policies, instantiate_policy, AttributeSet, PolicyAst, PolicyError};
use crate::store::{BlobStore, ContentId, FsStore, MemStore, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Abe(#[from] AbeError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("policies rejected by the process owner")]
    PolicyRejected,
    #[error("policy map does not match the confidential messages: {0}")]
    InvalidPolicyMap(String),
    #[error("corrupt policy bundle: {0}")]
    CorruptBundle(String),
    #[error("model `{0}` is already configured")]
    AlreadyConfigured(String),
    #[error("unknown deployment {0}")]
    UnknownDeployment(u64),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("`{0}` is neither an element nor a public variable")]
    UnknownTarget(String),
    #[error("message `{0}` is not confidential")]
    NotConfidential(String),
    #[error("message `{0}` is confidential; use the confidential path")]
    ConfidentialMessage(String),
    #[error("variable `{0}` is confidential and cannot be sent in clear")]
    ConfidentialVariable(String),
    #[error("no valid certifier attestation for role `{0}`")]
    MissingAttestation(String),
    #[error("role `{0}` is not covered by any registration")]
    RoleUncovered(String),
    #[error("role `{0}` is not part of the model")]
    UnknownRole(String),
    #[error("{0} is not a registered participant")]
    NotARegistrant(Address),
    #[error("attribute `{0}` has not been granted")]
    UngrantedAttribute(String),
    #[error("no confidential record for `{message}` in {instance}")]
    NotFound { instance: String, message: String },
    #[error("stored ciphertext does not match the on-chain hash")]
    TamperDetected,
    #[error("transaction reverted: {}", .0.revert_reason().unwrap_or_default())]
    Reverted(Box<Receipt>),
}

impl EngineError {
    /// The contract guard that fired, for reverted transactions.
    pub fn revert_kind(&self) -> Option<RevertKind> {
        match self {
            EngineError::Reverted(r) => r.revert_reason().and_then(RevertKind::of_reason),
            _ => None,
        }
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

/// A configured process: its on-chain spec id, the confirmed parametric
/// policies, and the locator of the stored bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessDeployment {
    pub spec_id: u64,
    pub model: ChoreographyModel,
    pub policy_map: BTreeMap<String, PolicyAst>,
    pub policy_locator: ContentId,
    pub receipt: Option<Receipt>,
}

#[derive(Debug, Clone)]
pub struct ParticipantRegistration {
    pub account: Account,
    pub role: String,
    pub attestation: Attestation,
}

#[derive(Debug, Clone)]
pub struct Instantiation {
    pub instance_id: String,
    /// createInstance, storePolicyLocator, then one registerGrant per
    /// registration.
    pub receipts: Vec<Receipt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PublicValue {
    Variable(Option<Value>),
    Element(ElementState),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GateReport {
    pub checked: usize,
    /// (key holder, message, decrypted, policy satisfied)
    pub mismatches: Vec<(String, String, bool, bool)>,
}

impl GateReport {
    pub fn holds(&self) -> bool {
        self.mismatches.is_empty()
    }
}

pub struct Engine {
    config: EngineConfig,
    certifiers: BTreeSet<[u8; 32]>,
    ledger: RwLock<Ledger>,
    store: Arc<dyn BlobStore>,
    authorities: RwLock<Vec<AuthorityConfig>>,
    rng: Mutex<ChaCha20Rng>,
    deployments: RwLock<BTreeMap<u64, ProcessDeployment>>,
    grants: RwLock<BTreeMap<Address, AttributeSet>>,
    instance_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    instantiate_lock: Mutex<()>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("config", &self.config).finish_non_exhaustive()
    }
}

fn contracts_for(config: &EngineConfig, certifiers: &[[u8; 32]]) -> Vec<(String, Arc<dyn Contract>)> {
    vec![
        (
            PROCESS_CONTRACT.to_string(),
            Arc::new(ProcessContract::new(config.first_instance, certifiers.iter().copied())) as Arc<dyn Contract>,
        ),
        (CONFIDENTIALITY_CONTRACT.to_string(), Arc::new(ConfidentialityContract::new(certifiers.iter().copied()))),
    ]
}

fn open_store(config: &EngineConfig) -> Result<Arc<dyn BlobStore>> {
    Ok(match &config.store_root {
        Some(root) => Arc::new(FsStore::open(root)?),
        None => Arc::new(MemStore::new()),
    })
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Engine> {
        let store = open_store(&config)?;
        Engine::with_store(config, store)
    }

    pub fn with_store(config: EngineConfig, store: Arc<dyn BlobStore>) -> Result<Engine> {
        config.check()?;
        let mut rng = match config.seed {
            Some(s) => ChaCha20Rng::seed_from_u64(s),
            None => ChaCha20Rng::from_entropy(),
        };
        let partition = config.partition()?;
        let authorities = match config.authority_secrets()? {
            Some(secrets) => setup_with_secrets(secrets, &partition)?,
            None => setup_authorities(&mut rng, config.authorities.count, &partition)?,
        };
        let certifiers = config.certifier_keys()?;
        let mut ledger = Ledger::new(config.gas);
        for (id, c) in contracts_for(&config, &certifiers) {
            ledger.deploy(&id, c)?;
        }
        Ok(Engine::assemble(config, certifiers, ledger, store, authorities, rng))
    }

    fn assemble(
        config: EngineConfig,
        certifiers: Vec<[u8; 32]>,
        ledger: Ledger,
        store: Arc<dyn BlobStore>,
        authorities: Vec<AuthorityConfig>,
        rng: ChaCha20Rng,
    ) -> Engine {
        Engine {
            config,
            certifiers: certifiers.into_iter().collect(),
            ledger: RwLock::new(ledger),
            store,
            authorities: RwLock::new(authorities),
            rng: Mutex::new(rng),
            deployments: RwLock::new(BTreeMap::new()),
            grants: RwLock::new(BTreeMap::new()),
            instance_locks: Mutex::new(HashMap::new()),
            instantiate_lock: Mutex::new(()),
        }
    }

    /// Rebuilds an engine from nothing but an exported chain, the content
    /// store, and the authorities' secrets: the chain is replayed from
    /// genesis, deployments are reloaded from their stored bundles and the
    /// grant table is re-read from the confidentiality contract.
    pub fn recover(
        config: EngineConfig,
        store: Arc<dyn BlobStore>,
        blocks: &[Block],
        authorities: Vec<AuthorityConfig>,
    ) -> Result<Engine> {
        config.check()?;
        let certifiers = config.certifier_keys()?;
        let ledger = Ledger::replay(config.gas, contracts_for(&config, &certifiers), blocks)?;
        let rng = match config.seed {
            // Fresh stream: reusing the original one would repeat nonces.
            Some(s) => ChaCha20Rng::seed_from_u64(s ^ ledger.height().rotate_left(32)),
            None => ChaCha20Rng::from_entropy(),
        };
        let engine = Engine::assemble(config, certifiers, ledger, store, authorities, rng);
        {
            let ledger = engine.ledger.read().unwrap();
            let pc = ProcessClient::new(&ledger);
            for spec_id in 0..pc.spec_count()? {
                let locator = ContentId::from_digest(pc.spec_locator(spec_id)?);
                let bundle = PolicyBundle::from_bytes(&engine.store.get(&locator)?)?;
                let (model, policy_map) = bundle.parse()?;
                engine.assign_authorities(&model, &policy_map)?;
                engine.deployments.write().unwrap().insert(
                    spec_id,
                    ProcessDeployment { spec_id, model, policy_map, policy_locator: locator, receipt: None },
                );
            }
            let cc = ConfidentialityClient::new(&ledger);
            let mut grants = engine.grants.write().unwrap();
            for who in cc.grantees()? {
                let set = grants.entry(who).or_default();
                for g in cc.grants(&who)? {
                    set.insert(g.role)?;
                    if let AttestationScope::Instance(pid) = g.scope {
                        set.insert(pid)?;
                    }
                }
            }
        }
        Ok(engine)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn store(&self) -> &Arc<dyn BlobStore> {
        &self.store
    }

    pub fn authorities(&self) -> Vec<AuthorityConfig> {
        self.authorities.read().unwrap().clone()
    }

    pub fn with_ledger<R>(&self, f: impl FnOnce(&Ledger) -> R) -> R {
        f(&self.ledger.read().unwrap())
    }

    pub fn blocks(&self) -> Vec<Block> {
        self.with_ledger(|l| l.blocks().to_vec())
    }

    pub fn receipts(&self) -> Vec<Receipt> {
        self.with_ledger(|l| l.receipts().to_vec())
    }

    pub fn verify_chain(&self) -> bool {
        self.with_ledger(Ledger::verify_chain)
    }

    pub fn state_root(&self) -> [u8; 32] {
        self.with_ledger(Ledger::state_root)
    }

    pub fn deployment(&self, spec_id: u64) -> Option<ProcessDeployment> {
        self.deployments.read().unwrap().get(&spec_id).cloned()
    }

    pub fn deployments(&self) -> Vec<ProcessDeployment> {
        self.deployments.read().unwrap().values().cloned().collect()
    }

    pub fn grants(&self, who: &Address) -> AttributeSet {
        self.grants.read().unwrap().get(who).cloned().unwrap_or_default()
    }

    pub fn next_instance_id(&self) -> Result<String> {
        Ok(self.with_ledger(|l| ProcessClient::new(l).next_instance_id())?)
    }

    pub fn instance_state(&self, pid: &str) -> Result<InstanceState> {
        self.with_ledger(|l| ProcessClient::new(l).instance_state(pid)).map_err(|_| EngineError::UnknownInstance(pid.into()))
    }

    /// Signs `args` with `who`'s key and seals it; reverts become errors.
    fn submit(&self, who: &Account, target: &str, function: &str, args: Vec<u8>) -> Result<Receipt> {
        let mut ledger = self.ledger.write().unwrap();
        let nonce = ledger.next_nonce(&who.address());
        let receipt = ledger.submit(Transaction::signed(who, target, function, args, nonce))?;
        if receipt.status.is_success() {
            Ok(receipt)
        } else {
            Err(EngineError::Reverted(Box::new(receipt)))
        }
    }

    fn instance_lock(&self, pid: &str) -> Arc<Mutex<()>> {
        Arc::clone(self.instance_locks.lock().unwrap().entry(pid.to_string()).or_default())
    }

    fn deployment_of(&self, pid: &str) -> Result<ProcessDeployment> {
        let header = self
            .with_ledger(|l| ProcessClient::new(l).header(pid))
            .map_err(|_| EngineError::UnknownInstance(pid.into()))?;
        self.deployment(header.spec_id).ok_or(EngineError::UnknownDeployment(header.spec_id))
    }

    /// Gives every role and policy attribute of a deployment a managing
    /// authority, round-robin over authorities in first-seen order.
    fn assign_authorities(&self, model: &ChoreographyModel, policies: &BTreeMap<String, PolicyAst>) -> Result<()> {
        let mut auths = self.authorities.write().unwrap();
        let mut attrs: Vec<String> = model.roles.iter().cloned().collect();
        for p in policies.values() {
            attrs.extend(p.attributes().into_iter().filter(|a| !a.starts_with('$')).map(String::from));
        }
        for a in attrs {
            if managing_authority(&auths, &a).is_some() {
                continue;
            }
            let assigned: usize = auths
                .iter()
                .map(|c| c.managed_attributes.iter().filter(|p| matches!(p, AttributePattern::Exact(_))).count())
                .sum();
            let idx = assigned % auths.len();
            assign_attribute(&mut auths, AttributePattern::Exact(a), idx)?;
        }
        Ok(())
    }

    /// Parses the model and drafts the policies the owner will review.
    pub fn draft_policies(
        &self,
        model_doc: &[u8],
        auditors: &[String],
    ) -> Result<(ChoreographyModel, BTreeMap<String, PolicyAst>)> {
        let model = parse_model(model_doc)?;
        let policies = generate_policies(&model, auditors)?;
        Ok((model, policies))
    }

    /// Configures a process. `review` sees the generated policies, may edit
    /// them in place, and returns whether the owner confirms.
    pub fn configure(
        &self,
        owner: &Account,
        model_doc: &[u8],
        auditors: &[String],
        review: impl FnOnce(&ChoreographyModel, &mut BTreeMap<String, PolicyAst>) -> bool,
    ) -> Result<ProcessDeployment> {
        let (model, mut policies) = self.draft_policies(model_doc, auditors)?;
        if !review(&model, &mut policies) {
            return Err(EngineError::PolicyRejected);
        }
        let confidential: BTreeSet<&str> = model.confidential_messages().map(|m| m.id.as_str()).collect();
        let covered: BTreeSet<&str> = policies.keys().map(String::as_str).collect();
        if confidential != covered {
            let diff: Vec<&str> = confidential.symmetric_difference(&covered).copied().collect();
            return Err(EngineError::InvalidPolicyMap(diff.join(", ")));
        }
        if self.with_ledger(|l| ProcessClient::new(l).spec_by_model(&model.id))?.is_some() {
            return Err(EngineError::AlreadyConfigured(model.id.clone()));
        }

        let bundle = PolicyBundle::new(&model, &policies);
        let locator = self.store.put(&bundle.to_bytes())?;
        self.assign_authorities(&model, &policies)?;
        let spec = ProcessSpec::compile(&model);
        let receipt = self.submit(
            owner,
            PROCESS_CONTRACT,
            "registerSpec",
            ProcessClient::register_spec_args(&spec, locator.digest()),
        )?;
        let spec_id = u64::from_le_bytes(receipt.output.as_slice().try_into().map_err(|_| {
            EngineError::Ledger(LedgerError::QueryFailed("registerSpec returned no id".into()))
        })?);
        let deployment =
            ProcessDeployment { spec_id, model, policy_map: policies, policy_locator: locator, receipt: Some(receipt) };
        self.deployments.write().unwrap().insert(spec_id, deployment.clone());
        Ok(deployment)
    }

    fn attestation_ok(&self, att: &Attestation, subject: &Address, role: &str, scope: &AttestationScope) -> bool {
        self.certifiers.contains(&att.certifier)
            && att.subject == *subject
            && att.role == role
            && att.scope == *scope
            && att.signature_valid()
    }

    /// Mints a new process instance with the given attested participants.
    pub fn instantiate(
        &self,
        spec_id: u64,
        registrations: &[ParticipantRegistration],
        kickstarter: &Account,
    ) -> Result<Instantiation> {
        let dep = self.deployment(spec_id).ok_or(EngineError::UnknownDeployment(spec_id))?;
        // Attestations name the instance id about to be minted.
        let _guard = self.instantiate_lock.lock().unwrap();
        let pid = self.next_instance_id()?;
        let scope = AttestationScope::Instance(pid.clone());

        for r in registrations {
            if !dep.model.roles.contains(&r.role) {
                return Err(EngineError::UnknownRole(r.role.clone()));
            }
        }
        for role in &dep.model.roles {
            if !registrations.iter().any(|r| &r.role == role) {
                return Err(EngineError::RoleUncovered(role.clone()));
            }
        }
        for r in registrations {
            if !self.attestation_ok(&r.attestation, &r.account.address(), &r.role, &scope) {
                return Err(EngineError::MissingAttestation(r.role.clone()));
            }
        }
        if !registrations.iter().any(|r| r.account.address() == kickstarter.address()) {
            return Err(EngineError::NotARegistrant(kickstarter.address()));
        }

        let bindings: Vec<(String, Address, Attestation)> =
            registrations.iter().map(|r| (r.role.clone(), r.account.address(), r.attestation.clone())).collect();
        let mut receipts = vec![self.submit(
            kickstarter,
            PROCESS_CONTRACT,
            "createInstance",
            ProcessClient::create_instance_args(spec_id, &bindings),
        )?];
        receipts.push(self.submit(
            kickstarter,
            CONFIDENTIALITY_CONTRACT,
            "storePolicyLocator",
            ConfidentialityClient::store_policy_locator_args(&pid, dep.policy_locator.digest()),
        )?);
        for r in registrations {
            receipts.push(self.submit(
                &r.account,
                CONFIDENTIALITY_CONTRACT,
                "registerGrant",
                ConfidentialityClient::register_grant_args(&r.attestation),
            )?);
            let mut grants = self.grants.write().unwrap();
            let set = grants.entry(r.account.address()).or_default();
            set.insert(r.role.clone())?;
            set.insert(pid.clone())?;
        }
        Ok(Instantiation { instance_id: pid, receipts })
    }

    /// Registers an instance-free (auditor) role for `account`.
    pub fn register_auditor(&self, account: &Account, attestation: &Attestation) -> Result<Receipt> {
        if !self.attestation_ok(attestation, &account.address(), &attestation.role, &AttestationScope::Global) {
            return Err(EngineError::MissingAttestation(attestation.role.clone()));
        }
        let receipt = self.submit(
            account,
            CONFIDENTIALITY_CONTRACT,
            "registerGrant",
            ConfidentialityClient::register_grant_args(attestation),
        )?;
        self.grants.write().unwrap().entry(account.address()).or_default().insert(attestation.role.clone())?;
        Ok(receipt)
    }

    fn reject_confidential_vars(dep: &ProcessDeployment, vars: &[(String, Value)]) -> Result<()> {
        let table = dep.model.variable_table();
        match vars.iter().find(|(n, _)| table.get(n.as_str()).is_some_and(|d| d.confidential)) {
            Some((n, _)) => Err(EngineError::ConfidentialVariable(n.clone())),
            None => Ok(()),
        }
    }

    /// Public path: variables go on chain in clear.
    pub fn transact_public(
        &self,
        pid: &str,
        message: &str,
        sender: &Account,
        vars: &[(String, Value)],
    ) -> Result<Receipt> {
        let dep = self.deployment_of(pid)?;
        if dep.model.element(message).is_some_and(|e| e.is_confidential()) {
            return Err(EngineError::ConfidentialMessage(message.into()));
        }
        Self::reject_confidential_vars(&dep, vars)?;
        let lock = self.instance_lock(pid);
        let _g = lock.lock().unwrap();
        self.submit(sender, PROCESS_CONTRACT, "updatePublicState", ProcessClient::update_public_state_args(pid, message, vars))
    }

    /// Confidential path: encrypts `payload` under the message policy
    /// instantiated for `pid`, stores the ciphertext and records its hash on
    /// chain, advancing control flow with `public_vars`.
    pub fn transact_confidential(
        &self,
        pid: &str,
        message: &str,
        sender: &Account,
        payload: &[u8],
        public_vars: &[(String, Value)],
    ) -> Result<(ContentId, Receipt)> {
        let dep = self.deployment_of(pid)?;
        if !dep.model.element(message).is_some_and(|e| e.is_confidential()) {
            return Err(EngineError::NotConfidential(message.into()));
        }
        Self::reject_confidential_vars(&dep, public_vars)?;
        let lock = self.instance_lock(pid);
        let _g = lock.lock().unwrap();

        let locator = self
            .with_ledger(|l| ConfidentialityClient::new(l).policy_locator(pid))?
            .ok_or_else(|| EngineError::CorruptBundle(format!("no policy locator for {pid}")))?;
        let bundle = PolicyBundle::from_bytes(&self.store.get(&ContentId::from_digest(locator))?)?;
        let policy: PolicyAst = bundle
            .policies
            .get(message)
            .ok_or_else(|| EngineError::InvalidPolicyMap(message.into()))?
            .parse()?;
        let policy = instantiate_policy(&policy, pid)?;
        let ciphertext = {
            let auths = self.authorities.read().unwrap();
            abe::encrypt(&mut *self.rng.lock().unwrap(), &auths, &policy, payload)?
        };
        let bytes = ciphertext.to_bytes();
        let cid = self.store.put(&bytes)?;
        let payload_hash: [u8; 32] = Sha256::digest(&bytes).into();
        let receipt = self.submit(
            sender,
            CONFIDENTIALITY_CONTRACT,
            "recordConfidential",
            ConfidentialityClient::record_confidential_args(pid, message, cid.digest(), &payload_hash, public_vars),
        )?;
        Ok((cid, receipt))
    }

    /// Issues a key for exactly `attrs`, which must all be granted to `user`.
    /// The request is notarized on chain.
    pub fn request_key(&self, user: &Account, attrs: &AttributeSet) -> Result<(AbKey, Receipt)> {
        let granted = self.grants(&user.address());
        if let Some(a) = attrs.iter().find(|a| !granted.contains(a)) {
            return Err(EngineError::UngrantedAttribute(a.to_string()));
        }
        let key = keygen(&self.authorities.read().unwrap(), &user.address().to_string(), attrs)?;
        let list: Vec<String> = attrs.iter().map(String::from).collect();
        let receipt =
            self.submit(user, CONFIDENTIALITY_CONTRACT, "logKeyRequest", ConfidentialityClient::log_key_request_args(&list))?;
        Ok((key, receipt))
    }

    /// Issues a key covering everything granted to `user`.
    pub fn request_full_key(&self, user: &Account) -> Result<(AbKey, Receipt)> {
        let granted = self.grants(&user.address());
        self.request_key(user, &granted)
    }

    /// Reads a public variable or the state of an element. Free; submits
    /// nothing.
    pub fn inspect_public(&self, pid: &str, what: &str) -> Result<PublicValue> {
        let dep = self.deployment_of(pid)?;
        self.with_ledger(|l| {
            let pc = ProcessClient::new(l);
            if dep.model.element(what).is_some() {
                Ok(PublicValue::Element(pc.element_state(pid, what)?))
            } else if dep.model.variable_table().get(what).is_some_and(|d| !d.confidential) {
                Ok(PublicValue::Variable(pc.public_var(pid, what)?))
            } else {
                Err(EngineError::UnknownTarget(what.into()))
            }
        })
    }

    /// Fetches the ciphertext recorded for `message` and decrypts it locally.
    pub fn inspect_confidential(&self, key: &AbKey, pid: &str, message: &str) -> Result<Vec<u8>> {
        let ct = self.fetch_ciphertext(pid, message)?;
        Ok(abe::decrypt(key, &ct)?)
    }

    pub fn fetch_ciphertext(&self, pid: &str, message: &str) -> Result<AbeCiphertext> {
        let record = self
            .with_ledger(|l| ConfidentialityClient::new(l).record(pid, message))?
            .ok_or_else(|| EngineError::NotFound { instance: pid.into(), message: message.into() })?;
        let bytes = self.store.get(&ContentId::from_digest(record.locator_digest))?;
        if <[u8; 32]>::from(Sha256::digest(&bytes)) != record.payload_hash {
            return Err(EngineError::TamperDetected);
        }
        Ok(AbeCiphertext::from_bytes(&bytes)?)
    }

    /// Checks, for every recorded confidential message of `pid` and every
    /// key, that decryption succeeds exactly when the policy on the
    /// ciphertext is satisfied by the key's attributes.
    pub fn confidentiality_gate(&self, pid: &str, keys: &[&AbKey]) -> Result<GateReport> {
        let dep = self.deployment_of(pid)?;
        let mut report = GateReport::default();
        for msg in dep.model.confidential_messages() {
            let ct = match self.fetch_ciphertext(pid, &msg.id) {
                Ok(ct) => ct,
                Err(EngineError::NotFound { .. }) => continue,
                Err(e) => return Err(e),
            };
            let policy = instantiate_policy(&dep.policy_map[&msg.id], pid)?;
            for key in keys {
                let satisfied = evaluate(&policy, &key.attributes())?;
                let decrypted = match abe::decrypt(key, &ct) {
                    Ok(_) => true,
                    Err(AbeError::PolicyNotSatisfied) => false,
                    Err(e) => return Err(e.into()),
                };
                report.checked += 1;
                if satisfied != decrypted {
                    report.mismatches.push((key.user_gid.clone(), msg.id.clone(), decrypted, satisfied));
                }
            }
        }
        Ok(report)
    }
}
