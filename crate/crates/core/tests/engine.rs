// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::sync::Arc;

use confetty::abe::AbeError;
use confetty::contracts::{Attestation, AttestationScope, ElementState, RevertKind};
use confetty::engine::{Engine, EngineConfig, EngineError, ParticipantRegistration, PolicyBundle, PublicValue};
use confetty::fixtures::{self, MINISTRY_INSPECTOR, XRAY_DOCUMENT};
use confetty::ledger::Account;
use confetty::model::Value;
use confetty::policy::{AttributeSet, PolicyAst};
use confetty::store::{BlobStore, ContentId, MemStore, StoreError};
use sha2::{Digest, Sha256};

struct World {
    engine: Engine,
    store: Arc<MemStore>,
    certifier: Account,
    people: BTreeMap<&'static str, Account>,
    inspector: Account,
}

fn world() -> World {
    let certifier = Account::from_seed(b"certifier");
    let cfg = EngineConfig::deterministic(11).with_certifier(&certifier.public_key()).with_authorities(3);
    let cfg = EngineConfig { first_instance: 476_948, ..cfg };
    let store = Arc::new(MemStore::new());
    let engine = Engine::with_store(cfg, store.clone() as Arc<dyn BlobStore>).unwrap();
    let people = ["PATIENT", "RADIOLOGY", "WARD", "INSURANCE"]
        .into_iter()
        .map(|r| (r, Account::from_seed(r.as_bytes())))
        .collect();
    World { engine, store, certifier, people, inspector: Account::from_seed(b"inspector") }
}

fn vars(v: &[(&str, Value)]) -> Vec<(String, Value)> {
    v.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

impl World {
    fn configure(&self) -> u64 {
        let auditors = [MINISTRY_INSPECTOR.to_string()];
        self.engine.configure(&self.people["PATIENT"], XRAY_DOCUMENT.as_bytes(), &auditors, |_, _| true).unwrap().spec_id
    }

    fn registrations(&self, pid: &str) -> Vec<ParticipantRegistration> {
        self.people
            .iter()
            .map(|(role, a)| ParticipantRegistration {
                account: a.clone(),
                role: role.to_string(),
                attestation: Attestation::issue(&self.certifier, a.address(), role, AttestationScope::Instance(pid.into())),
            })
            .collect()
    }

    fn instantiate(&self, spec: u64) -> String {
        let pid = self.engine.next_instance_id().unwrap();
        self.engine.instantiate(spec, &self.registrations(&pid), &self.people["PATIENT"]).unwrap().instance_id
    }

    fn audit(&self) {
        let att = Attestation::issue(&self.certifier, self.inspector.address(), MINISTRY_INSPECTOR, AttestationScope::Global);
        self.engine.register_auditor(&self.inspector, &att).unwrap();
    }

    /// Runs the longest path; returns the content ids of the three documents.
    fn run(&self, pid: &str) -> BTreeMap<&'static str, ContentId> {
        let p = |r: &str| &self.people[r];
        let e = &self.engine;
        let mut cids = BTreeMap::new();
        cids.insert("prescription", e.transact_confidential(pid, "prescription", p("PATIENT"), b"rx: chest x-ray", &[]).unwrap().0);
        e.transact_public(pid, "appointment_request", p("RADIOLOGY"), &vars(&[("requestedDate", Value::Str("05-01".into()))])).unwrap();
        e.transact_public(
            pid,
            "check_availability",
            p("WARD"),
            &vars(&[("accepted", Value::Bool(true)), ("date", Value::Str("05-02".into()))]),
        )
        .unwrap();
        e.transact_public(pid, "confirm_appointment", p("RADIOLOGY"), &vars(&[("appointmentDate", Value::Str("05-02".into()))]))
            .unwrap();
        cids.insert("registration", e.transact_confidential(pid, "registration", p("RADIOLOGY"), b"reg #42", &[]).unwrap().0);
        e.transact_public(pid, "temperature", p("PATIENT"), &vars(&[("temperature", Value::Int(36))])).unwrap();
        e.transact_confidential(pid, "vaccine_certification", p("PATIENT"), b"vaccinated", &[]).unwrap();
        e.transact_public(pid, "xray_exam", p("RADIOLOGY"), &vars(&[("examDone", Value::Bool(true))])).unwrap();
        cids.insert("report", e.transact_confidential(pid, "report", p("RADIOLOGY"), b"no findings", &[]).unwrap().0);
        e.transact_confidential(pid, "results", p("WARD"), b"results", &[]).unwrap();
        cids
    }
}

#[test]
fn configure_yields_the_expected_policies() {
    let w = world();
    let auditors = [MINISTRY_INSPECTOR.to_string()];
    let dep = w.engine.configure(&w.people["PATIENT"], XRAY_DOCUMENT.as_bytes(), &auditors, |_, _| true).unwrap();
    assert_eq!(dep.policy_map.len(), 5);
    assert_eq!(
        dep.policy_map["prescription"].to_string(),
        "MINISTRY-INSPECTOR or ($PID and (PATIENT or RADIOLOGY))"
    );
    assert_eq!(dep.policy_map["report"].to_string(), "MINISTRY-INSPECTOR or ($PID and (RADIOLOGY or WARD))");
    // The stored bundle is exactly what the owner confirmed.
    let stored = PolicyBundle::from_bytes(&w.store.get(&dep.policy_locator).unwrap()).unwrap();
    assert_eq!(stored.parse().unwrap().1, dep.policy_map);
    // One-shot per process.
    let again = w.engine.configure(&w.people["PATIENT"], XRAY_DOCUMENT.as_bytes(), &auditors, |_, _| true);
    assert!(matches!(again, Err(EngineError::AlreadyConfigured(_))));
}

#[test]
fn owner_edits_and_rejection() {
    let w = world();
    let owner = &w.people["PATIENT"];
    let rejected = w.engine.configure(owner, XRAY_DOCUMENT.as_bytes(), &[], |_, _| false);
    assert!(matches!(rejected, Err(EngineError::PolicyRejected)));

    let (model, generated) = w.engine.draft_policies(XRAY_DOCUMENT.as_bytes(), &[]).unwrap();
    let generated_id = ContentId::of(&PolicyBundle::new(&model, &generated).to_bytes());
    let dep = w
        .engine
        .configure(owner, XRAY_DOCUMENT.as_bytes(), &[], |_, p| {
            p.insert("report".into(), "$PID and WARD".parse::<PolicyAst>().unwrap());
            true
        })
        .unwrap();
    assert_ne!(dep.policy_locator, generated_id);
    assert_eq!(dep.policy_map["report"].to_string(), "$PID and WARD");
}

#[test]
fn dropping_a_policy_is_refused() {
    let w = world();
    let r = w.engine.configure(&w.people["PATIENT"], XRAY_DOCUMENT.as_bytes(), &[], |_, p| {
        p.remove("results");
        true
    });
    assert!(matches!(r, Err(EngineError::InvalidPolicyMap(m)) if m == "results"));
}

#[test]
fn model_without_confidential_messages_still_registers() {
    let mut m = fixtures::retail();
    for e in &mut m.elements {
        for v in &mut e.variables {
            v.confidential = false;
        }
    }
    let doc = confetty::model::serialize_model(&m);
    let w = world();
    let dep = w.engine.configure(&w.people["PATIENT"], doc.as_bytes(), &[], |_, _| true).unwrap();
    assert!(dep.policy_map.is_empty());
    assert!(dep.receipt.unwrap().status.is_success());
}

#[test]
fn instantiation_mints_pid_attributes() {
    let w = world();
    let spec = w.configure();
    let a = w.instantiate(spec);
    assert_eq!(a, "PID476948");
    let patient = w.people["PATIENT"].address();
    assert_eq!(w.engine.grants(&patient), AttributeSet::new(["PATIENT", "PID476948"]).unwrap());
    let b = w.instantiate(spec);
    assert_eq!(b, "PID476949");
    assert_eq!(w.engine.grants(&patient), AttributeSet::new(["PATIENT", "PID476948", "PID476949"]).unwrap());
}

#[test]
fn instantiation_requires_attestations() {
    let w = world();
    let spec = w.configure();
    let pid = w.engine.next_instance_id().unwrap();
    let mut regs = w.registrations(&pid);
    let forger = Account::from_seed(b"forger");
    regs[0].attestation = Attestation::issue(&forger, regs[0].account.address(), &regs[0].role, AttestationScope::Instance(pid.clone()));
    let r = w.engine.instantiate(spec, &regs, &w.people["PATIENT"]);
    assert!(matches!(r, Err(EngineError::MissingAttestation(_))), "{r:?}");

    let mut regs = w.registrations(&pid);
    regs.retain(|r| r.role != "WARD");
    let r = w.engine.instantiate(spec, &regs, &w.people["PATIENT"]);
    assert!(matches!(r, Err(EngineError::RoleUncovered(role)) if role == "WARD"));

    let r = w.engine.instantiate(spec, &w.registrations(&pid), &w.inspector);
    assert!(matches!(r, Err(EngineError::NotARegistrant(_))));
    assert_eq!(w.engine.with_ledger(|l| l.height()), 1, "only configure was sealed");
}

#[test]
fn public_transactions_and_guards() {
    let w = world();
    let spec = w.configure();
    let pid = w.instantiate(spec);
    let e = &w.engine;
    e.transact_confidential(&pid, "prescription", &w.people["PATIENT"], b"rx", &[]).unwrap();
    e.transact_public(&pid, "appointment_request", &w.people["RADIOLOGY"], &vars(&[("requestedDate", Value::Str("d".into()))]))
        .unwrap();

    let accepted = vars(&[("accepted", Value::Bool(true)), ("date", Value::Str("d".into()))]);
    let wrong = e.transact_public(&pid, "check_availability", &w.people["PATIENT"], &accepted).unwrap_err();
    assert_eq!(wrong.revert_kind(), Some(RevertKind::WrongSender));
    if let EngineError::Reverted(rc) = &wrong {
        assert!(rc.revert_reason().unwrap().starts_with("WrongSender"));
    }
    e.transact_public(&pid, "check_availability", &w.people["WARD"], &accepted).unwrap();
    assert_eq!(e.inspect_public(&pid, "accepted").unwrap(), PublicValue::Variable(Some(Value::Bool(true))));
    assert_eq!(e.inspect_public(&pid, "confirm_appointment").unwrap(), PublicValue::Element(ElementState::Enabled));
    assert_eq!(e.inspect_public(&pid, "prescription").unwrap(), PublicValue::Element(ElementState::Completed));
    assert!(matches!(e.inspect_public(&pid, "medicalPrescription"), Err(EngineError::UnknownTarget(_))));
    assert!(matches!(e.inspect_public("PID1", "accepted"), Err(EngineError::UnknownInstance(_))));

    let height = e.with_ledger(|l| l.height());
    let leak = vars(&[("appointmentDate", Value::Str("d".into())), ("report", Value::Str("secret".into()))]);
    assert!(matches!(
        e.transact_public(&pid, "confirm_appointment", &w.people["RADIOLOGY"], &leak),
        Err(EngineError::ConfidentialVariable(v)) if v == "report"
    ));
    assert!(matches!(
        e.transact_public(&pid, "registration", &w.people["RADIOLOGY"], &[]),
        Err(EngineError::ConfidentialMessage(_))
    ));
    assert!(matches!(
        e.transact_confidential(&pid, "confirm_appointment", &w.people["RADIOLOGY"], b"x", &[]),
        Err(EngineError::NotConfidential(_))
    ));
    e.inspect_public(&pid, "accepted").unwrap();
    assert_eq!(e.with_ledger(|l| l.height()), height, "rejections and reads seal nothing");
}

#[test]
fn decryption_matrix_after_the_longest_path() {
    let w = world();
    w.audit();
    let spec = w.configure();
    let pid = w.instantiate(spec);
    let cids = w.run(&pid);
    assert!(w.engine.instance_state(&pid).unwrap().is_completed());

    let key = |a: &Account| w.engine.request_full_key(a).unwrap().0;
    let patient = key(&w.people["PATIENT"]);
    let ward = key(&w.people["WARD"]);
    let inspector = key(&w.inspector);
    let insurance = key(&w.people["INSURANCE"]);
    let opens = |k, m| w.engine.inspect_confidential(k, &pid, m).is_ok();
    assert!(opens(&patient, "prescription") && opens(&patient, "registration") && !opens(&patient, "report"));
    assert!(!opens(&ward, "prescription") && !opens(&ward, "registration") && opens(&ward, "report"));
    assert!(opens(&inspector, "prescription") && opens(&inspector, "registration") && opens(&inspector, "report"));
    assert!(!opens(&insurance, "vaccine_certification"));
    assert_eq!(w.engine.inspect_confidential(&patient, &pid, "prescription").unwrap(), b"rx: chest x-ray");
    assert!(matches!(
        w.engine.inspect_confidential(&ward, &pid, "prescription"),
        Err(EngineError::Abe(AbeError::PolicyNotSatisfied))
    ));

    // The ciphertext carries the instantiated policy, and its hash is on chain.
    let ct = w.engine.fetch_ciphertext(&pid, "prescription").unwrap();
    assert_eq!(ct.policy, format!("MINISTRY-INSPECTOR or ({pid} and (PATIENT or RADIOLOGY))"));
    let bytes = w.store.get(&cids["prescription"]).unwrap();
    let rec = w.engine.with_ledger(|l| confetty::contracts::ConfidentialityClient::new(l).record(&pid, "prescription")).unwrap().unwrap();
    assert_eq!(<[u8; 32]>::from(Sha256::digest(&bytes)), rec.payload_hash);

    let gate = w.engine.confidentiality_gate(&pid, &[&patient, &ward, &inspector, &insurance]).unwrap();
    assert!(gate.holds(), "{gate:?}");
    assert_eq!(gate.checked, 5 * 4);
}

#[test]
fn auditor_reads_every_instance_with_one_key() {
    let w = world();
    w.audit();
    let spec = w.configure();
    let a = w.instantiate(spec);
    let b = w.instantiate(spec);
    w.engine.transact_confidential(&a, "prescription", &w.people["PATIENT"], b"A", &[]).unwrap();
    w.engine.transact_confidential(&b, "prescription", &w.people["PATIENT"], b"B", &[]).unwrap();
    let before = w.engine.with_ledger(|l| l.height());
    let (k, _) = w.engine.request_full_key(&w.inspector).unwrap();
    assert_eq!(w.engine.with_ledger(|l| l.height()), before + 1, "one notarized request");
    assert_eq!(w.engine.inspect_confidential(&k, &a, "prescription").unwrap(), b"A");
    assert_eq!(w.engine.inspect_confidential(&k, &b, "prescription").unwrap(), b"B");
    // A participant key for instance A does not open instance B.
    let (pk, _) = w.engine.request_full_key(&w.people["RADIOLOGY"]).unwrap();
    assert!(w.engine.inspect_confidential(&pk, &a, "prescription").is_ok());
    let log = w.engine.with_ledger(|l| confetty::contracts::ConfidentialityClient::new(l).key_log()).unwrap();
    assert_eq!(log.len(), 2);
}

#[test]
fn key_requests_are_limited_to_grants() {
    let w = world();
    let spec = w.configure();
    w.instantiate(spec);
    let ask = AttributeSet::new(["WARD"]).unwrap();
    assert!(matches!(
        w.engine.request_key(&w.people["PATIENT"], &ask),
        Err(EngineError::UngrantedAttribute(a)) if a == "WARD"
    ));
}

#[test]
fn tampered_ciphertext_is_detected() {
    let w = world();
    let spec = w.configure();
    let pid = w.instantiate(spec);
    let (cid, _) = w.engine.transact_confidential(&pid, "prescription", &w.people["PATIENT"], b"rx", &[]).unwrap();
    let (k, _) = w.engine.request_full_key(&w.people["PATIENT"]).unwrap();
    assert!(w.store.tamper(&cid, |b| b[10] ^= 1));
    assert!(matches!(
        w.engine.inspect_confidential(&k, &pid, "prescription"),
        Err(EngineError::Store(StoreError::TamperDetected(_)))
    ));
    assert!(matches!(
        w.engine.inspect_confidential(&k, &pid, "registration"),
        Err(EngineError::NotFound { .. })
    ));
}

#[test]
fn recovery_reproduces_reads() {
    let w = world();
    w.audit();
    let spec = w.configure();
    let pid = w.instantiate(spec);
    w.run(&pid);
    let blocks = w.engine.blocks();
    let authorities = w.engine.authorities();
    let config = w.engine.config().clone();
    let (k, _) = w.engine.request_full_key(&w.inspector).unwrap();
    let before: Vec<_> = ["prescription", "registration", "report"]
        .iter()
        .map(|m| w.engine.inspect_confidential(&k, &pid, m).unwrap())
        .collect();
    let grants = w.engine.grants(&w.people["WARD"].address());
    let root = w.engine.state_root();
    let store = w.store.clone();
    drop(w.engine);

    let blocks_before_key = &blocks[..];
    let engine = Engine::recover(config, store, blocks_before_key, authorities).unwrap();
    assert_eq!(engine.grants(&Account::from_seed(b"WARD").address()), grants);
    assert_eq!(engine.deployments().len(), 1);
    let (k2, _) = engine.request_full_key(&w.inspector).unwrap();
    let after: Vec<_> = ["prescription", "registration", "report"]
        .iter()
        .map(|m| engine.inspect_confidential(&k2, &pid, m).unwrap())
        .collect();
    assert_eq!(before, after);
    assert_eq!(engine.state_root(), root);
}

#[test]
fn concurrent_instances_replay_to_the_same_state() {
    let w = world();
    w.audit();
    let spec = w.configure();
    let pids: Vec<String> = (0..4).map(|_| w.instantiate(spec)).collect();
    std::thread::scope(|s| {
        for pid in &pids {
            let w = &w;
            s.spawn(move || w.run(pid));
        }
    });
    for pid in &pids {
        assert!(w.engine.instance_state(pid).unwrap().is_completed(), "{pid}");
    }
    assert!(w.engine.verify_chain());
    let recovered =
        Engine::recover(w.engine.config().clone(), w.store.clone(), &w.engine.blocks(), w.engine.authorities()).unwrap();
    assert_eq!(recovered.state_root(), w.engine.state_root());
    let (k, _) = recovered.request_full_key(&w.inspector).unwrap();
    for pid in &pids {
        assert_eq!(recovered.inspect_confidential(&k, pid, "report").unwrap(), b"no findings");
    }
}
