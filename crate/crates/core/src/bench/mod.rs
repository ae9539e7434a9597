// SPDX-License-Identifier: Apache-2.0

//! Scenario replay and scaling benches.
//!
//! A [`ScenarioScript`] names a model, the actors and their roles, and the
//! ordered steps to run. [`run_scenario`] drives it through a fresh engine,
//! timing and metering each action under one of the four functionalities.
//! Only engine calls are timed; sealing is instant and there is no think
//! time.

mod export;
mod harness;
mod planner;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub use export::{report_rows_csv, summary_table, write_bench_outputs};
pub use harness::{bench_gateways, bench_model_size, bench_participants, bench_payload, BenchError, BenchOptions};
pub use planner::{path_steps, plan_path};

use crate::abe::{keygen, AbKey};
use crate::contracts::{Attestation, AttestationScope};
use crate::engine::{Engine, EngineConfig, EngineError, GateReport, ParticipantRegistration};
use crate::ledger::{Account, GasSchedule, Receipt};
use crate::model::{parse_model, serialize_model, ChoreographyModel, Value};
use crate::store::BlobStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Functionality {
    Configure,
    Instantiate,
    Transact,
    Inspect,
}

impl Functionality {
    pub const ALL: [Functionality; 4] =
        [Functionality::Configure, Functionality::Instantiate, Functionality::Transact, Functionality::Inspect];
}

impl fmt::Display for Functionality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Functionality::Configure => "configure",
            Functionality::Instantiate => "instantiate",
            Functionality::Transact => "transact",
            Functionality::Inspect => "inspect",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorDef {
    pub name: String,
    pub role: String,
    pub seed: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    TransactPublic {
        actor: String,
        message: String,
        #[serde(default)]
        vars: Vec<(String, Value)>,
    },
    TransactConfidential {
        actor: String,
        message: String,
        payload_bytes: usize,
        #[serde(default)]
        vars: Vec<(String, Value)>,
    },
    RequestKey {
        actor: String,
    },
    InspectPublic {
        target: String,
    },
    InspectConfidential {
        actor: String,
        message: String,
    },
}

impl Step {
    fn functionality(&self) -> Functionality {
        match self {
            Step::TransactPublic { .. } | Step::TransactConfidential { .. } => Functionality::Transact,
            _ => Functionality::Inspect,
        }
    }

    fn label(&self) -> String {
        match self {
            Step::TransactPublic { message, .. } | Step::TransactConfidential { message, .. } => message.clone(),
            Step::RequestKey { actor } => format!("key:{actor}"),
            Step::InspectPublic { target } => format!("read:{target}"),
            Step::InspectConfidential { actor, message } => format!("open:{message}:{actor}"),
        }
    }
}

/// A replayable run: model document, participants (one per role),
/// instance-free auditors, and the ordered steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioScript {
    pub model: String,
    pub actors: Vec<ActorDef>,
    #[serde(default)]
    pub auditors: Vec<ActorDef>,
    /// Actor that configures the process and kick-starts the instance.
    pub kickstarter: String,
    pub steps: Vec<Step>,
}

impl ScenarioScript {
    /// The default script for `model`: one actor per role named after it, the
    /// given auditors, the planned loop-free path, then a single key request
    /// by the first auditor who opens every confidential message.
    pub fn for_model(model: &ChoreographyModel, auditors: &[&str], payload_bytes: usize) -> ScenarioScript {
        let actor = |role: &str| ActorDef { name: role.into(), role: role.into(), seed: format!("actor/{role}") };
        let actors: Vec<ActorDef> = model.roles.iter().map(|r| actor(r)).collect();
        let auditors: Vec<ActorDef> = auditors.iter().map(|r| actor(r)).collect();
        let mut steps = path_steps(model, payload_bytes);
        let reader = auditors.first().map(|a| a.name.clone()).unwrap_or_else(|| actors[0].name.clone());
        steps.push(Step::RequestKey { actor: reader.clone() });
        let mut opened = std::collections::BTreeSet::new();
        for s in path_steps(model, payload_bytes) {
            if let Step::TransactConfidential { message, .. } = s {
                if opened.insert(message.clone()) {
                    steps.push(Step::InspectConfidential { actor: reader.clone(), message });
                }
            }
        }
        let kickstarter = actors[0].name.clone();
        ScenarioScript { model: serialize_model(model), actors, auditors, kickstarter, steps }
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::invalid(0, e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scripts always serialize")
    }

    /// Checks that every step names a declared actor and model element.
    pub fn validate(&self) -> Result<ChoreographyModel, ScenarioError> {
        let model = parse_model(self.model.as_bytes()).map_err(|e| ScenarioError::invalid(0, e.to_string()))?;
        let known = |a: &str| self.actors.iter().chain(&self.auditors).any(|d| d.name == a);
        if !known(&self.kickstarter) {
            return Err(ScenarioError::invalid(0, format!("unknown kickstarter `{}`", self.kickstarter)));
        }
        for d in &self.actors {
            if !model.roles.contains(&d.role) {
                return Err(ScenarioError::invalid(0, format!("actor `{}` plays undeclared role `{}`", d.name, d.role)));
            }
        }
        for (i, s) in self.steps.iter().enumerate() {
            let n = i + 1;
            let (actor, element) = match s {
                Step::TransactPublic { actor, message, .. }
                | Step::TransactConfidential { actor, message, .. }
                | Step::InspectConfidential { actor, message } => (Some(actor), Some(message)),
                Step::RequestKey { actor } => (Some(actor), None),
                Step::InspectPublic { target } => {
                    let is_var = model.variable_table().contains_key(target.as_str());
                    (None, (!is_var).then_some(target))
                }
            };
            if let Some(a) = actor.filter(|a| !known(a)) {
                return Err(ScenarioError::invalid(n, format!("unknown actor `{a}`")));
            }
            if let Some(e) = element.filter(|e| model.element(e).is_none()) {
                return Err(ScenarioError::invalid(n, format!("unknown element `{e}`")));
            }
        }
        Ok(model)
    }
}

#[derive(Debug)]
pub enum ScenarioFailure {
    Invalid(String),
    Engine(EngineError),
}

/// Where and why a scenario aborted. Step 0 is setup (configure and
/// instantiate); steps are numbered from 1.
#[derive(Debug, thiserror::Error)]
#[error("step {step}: {}", match .failure { ScenarioFailure::Invalid(m) => m.clone(), ScenarioFailure::Engine(e) => e.to_string() })]
pub struct ScenarioError {
    pub step: usize,
    pub failure: ScenarioFailure,
}

impl ScenarioError {
    fn invalid(step: usize, msg: impl Into<String>) -> Self {
        ScenarioError { step, failure: ScenarioFailure::Invalid(msg.into()) }
    }

    fn engine(step: usize, e: EngineError) -> Self {
        ScenarioError { step, failure: ScenarioFailure::Engine(e) }
    }

    pub fn revert_kind(&self) -> Option<crate::contracts::RevertKind> {
        match &self.failure {
            ScenarioFailure::Engine(e) => e.revert_kind(),
            ScenarioFailure::Invalid(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    /// 0 for setup actions.
    pub step: usize,
    pub functionality: Functionality,
    pub label: String,
    pub time_ms: f64,
    pub gas: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Value of the independent variable (e.g. participant count).
    pub config: String,
    pub rows: Vec<StepRow>,
    pub chain_verified: bool,
    pub gate_checked: usize,
    pub gate_holds: bool,
    pub completed: bool,
}

impl BenchReport {
    pub fn time_ms(&self, f: Functionality) -> f64 {
        self.rows.iter().filter(|r| r.functionality == f).map(|r| r.time_ms).sum()
    }

    pub fn gas(&self, f: Functionality) -> u64 {
        self.rows.iter().filter(|r| r.functionality == f).map(|r| r.gas).sum()
    }

    pub fn total_gas(&self) -> u64 {
        self.rows.iter().map(|r| r.gas).sum()
    }

    /// Script steps (not setup rows) of the given functionality.
    pub fn count(&self, f: Functionality) -> usize {
        self.rows.iter().filter(|r| r.functionality == f && r.step > 0).count()
    }
}

#[derive(Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub authorities: usize,
    pub gas: GasSchedule,
    pub first_instance: u64,
    pub store: Option<Arc<dyn BlobStore>>,
    pub config_label: String,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 1,
            authorities: 4,
            gas: GasSchedule::default(),
            first_instance: 476_948,
            store: None,
            config_label: String::new(),
        }
    }
}

/// A finished run: the report, the live engine (for further inspection),
/// the instance id and the certifier that attested everyone.
pub struct BenchRun {
    pub report: BenchReport,
    pub engine: Engine,
    pub instance_id: String,
    pub certifier: Account,
    pub accounts: BTreeMap<String, Account>,
}

impl BenchRun {
    /// A key over everything granted to `actor`, issued straight from the
    /// authorities without notarization (for checks outside the bench).
    pub fn offline_key(&self, actor: &str) -> Option<AbKey> {
        let a = self.accounts.get(actor)?;
        keygen(&self.engine.authorities(), &a.address().to_string(), &self.engine.grants(&a.address())).ok()
    }
}

pub fn certifier_for(seed: u64) -> Account {
    Account::from_seed(format!("{seed}/certifier").as_bytes())
}

pub fn engine_config(opts: &RunOptions) -> EngineConfig {
    let mut cfg = EngineConfig::deterministic(opts.seed)
        .with_certifier(&certifier_for(opts.seed).public_key())
        .with_authorities(opts.authorities.max(1));
    cfg.gas = opts.gas;
    cfg.first_instance = opts.first_instance;
    cfg
}

fn payload(rng: &mut ChaCha20Rng, n: usize) -> Vec<u8> {
    let mut v = vec![0u8; n];
    rng.fill_bytes(&mut v);
    v
}

fn gas_of(receipts: &[Receipt]) -> u64 {
    receipts.iter().map(|r| r.gas_used).sum()
}

pub fn run_scenario(script: &ScenarioScript, opts: &RunOptions) -> Result<BenchRun, ScenarioError> {
    script.validate()?;
    let setup = |e| ScenarioError::engine(0, e);
    let cfg = engine_config(opts);
    let engine = match &opts.store {
        Some(s) => Engine::with_store(cfg, Arc::clone(s)),
        None => Engine::new(cfg),
    }
    .map_err(setup)?;
    let certifier = certifier_for(opts.seed);
    let accounts: BTreeMap<String, Account> = script
        .actors
        .iter()
        .chain(&script.auditors)
        .map(|d| (d.name.clone(), Account::from_seed(format!("{}/{}", opts.seed, d.seed).as_bytes())))
        .collect();
    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let mut rows = Vec::new();
    let mut row = |step, functionality, label: String, started: Instant, gas| {
        rows.push(StepRow { step, functionality, label, time_ms: started.elapsed().as_secs_f64() * 1e3, gas })
    };

    let auditor_roles: Vec<String> = {
        let mut r: Vec<String> = Vec::new();
        for a in &script.auditors {
            if !r.contains(&a.role) {
                r.push(a.role.clone());
            }
        }
        r
    };
    let owner = &accounts[&script.kickstarter];
    let t = Instant::now();
    let dep = engine.configure(owner, script.model.as_bytes(), &auditor_roles, |_, _| true).map_err(setup)?;
    row(0, Functionality::Configure, "configure".into(), t, dep.receipt.as_ref().map_or(0, |r| r.gas_used));

    // Attestation issuance is the certifier's business, outside the bench.
    let pid = engine.next_instance_id().map_err(setup)?;
    let registrations: Vec<ParticipantRegistration> = script
        .actors
        .iter()
        .map(|d| {
            let account = accounts[&d.name].clone();
            let attestation =
                Attestation::issue(&certifier, account.address(), &d.role, AttestationScope::Instance(pid.clone()));
            ParticipantRegistration { account, role: d.role.clone(), attestation }
        })
        .collect();
    let auditor_atts: Vec<(Account, Attestation)> = script
        .auditors
        .iter()
        .map(|d| {
            let a = accounts[&d.name].clone();
            let att = Attestation::issue(&certifier, a.address(), &d.role, AttestationScope::Global);
            (a, att)
        })
        .collect();

    let t = Instant::now();
    let inst = engine.instantiate(dep.spec_id, &registrations, owner).map_err(setup)?;
    row(0, Functionality::Instantiate, "instantiate".into(), t, gas_of(&inst.receipts));
    for (a, att) in &auditor_atts {
        let t = Instant::now();
        let rc = engine.register_auditor(a, att).map_err(setup)?;
        row(0, Functionality::Instantiate, format!("auditor:{}", att.role), t, rc.gas_used);
    }
    let pid = inst.instance_id;

    let mut keys: BTreeMap<String, AbKey> = BTreeMap::new();
    for (i, step) in script.steps.iter().enumerate() {
        let n = i + 1;
        let fail = |e| ScenarioError::engine(n, e);
        let t;
        let gas = match step {
            Step::TransactPublic { actor, message, vars } => {
                t = Instant::now();
                engine.transact_public(&pid, message, &accounts[actor], vars).map_err(fail)?.gas_used
            }
            Step::TransactConfidential { actor, message, payload_bytes, vars } => {
                let data = payload(&mut rng, *payload_bytes);
                t = Instant::now();
                engine.transact_confidential(&pid, message, &accounts[actor], &data, vars).map_err(fail)?.1.gas_used
            }
            Step::RequestKey { actor } => {
                t = Instant::now();
                let (key, rc) = engine.request_full_key(&accounts[actor]).map_err(fail)?;
                keys.insert(actor.clone(), key);
                rc.gas_used
            }
            Step::InspectPublic { target } => {
                t = Instant::now();
                engine.inspect_public(&pid, target).map_err(fail)?;
                0
            }
            Step::InspectConfidential { actor, message } => {
                let key = keys
                    .get(actor)
                    .ok_or_else(|| ScenarioError::invalid(n, format!("`{actor}` has not requested a key")))?;
                t = Instant::now();
                engine.inspect_confidential(key, &pid, message).map_err(fail)?;
                0
            }
        };
        row(n, step.functionality(), step.label(), t, gas);
    }

    let chain_verified = engine.verify_chain();
    let all_keys: Vec<AbKey> = accounts
        .values()
        .filter_map(|a| keygen(&engine.authorities(), &a.address().to_string(), &engine.grants(&a.address())).ok())
        .collect();
    let gate: GateReport = engine
        .confidentiality_gate(&pid, &all_keys.iter().collect::<Vec<_>>())
        .map_err(|e| ScenarioError::engine(script.steps.len() + 1, e))?;
    let completed = engine.instance_state(&pid).map(|s| s.is_completed()).unwrap_or(false);
    let report = BenchReport {
        config: opts.config_label.clone(),
        rows,
        chain_verified,
        gate_checked: gate.checked,
        gate_holds: gate.holds(),
        completed,
    };
    Ok(BenchRun { report, engine, instance_id: pid, certifier, accounts })
}
