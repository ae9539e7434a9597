// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use confetty::contracts::{
    Attestation, AttestationScope, ConfidentialityClient, ConfidentialityContract, ElementState, ProcessClient,
    ProcessContract, ProcessSpec, RevertKind, CONFIDENTIALITY_CONTRACT, PROCESS_CONTRACT,
};
use confetty::fixtures;
use confetty::ledger::{Account, Address, Ledger, Receipt, Transaction};
use confetty::model::{BranchCondition, ChoreographyModel, ElementKind, Value};
use proptest::prelude::*;

struct Net {
    ledger: Ledger,
    certifier: Account,
    accounts: BTreeMap<String, Account>,
    outsider: Account,
}

impl Net {
    fn new(model: &ChoreographyModel) -> Net {
        let certifier = Account::from_seed(b"certifier");
        let mut ledger = Ledger::default();
        ledger.deploy(PROCESS_CONTRACT, Arc::new(ProcessContract::new(1, [certifier.public_key()]))).unwrap();
        ledger
            .deploy(CONFIDENTIALITY_CONTRACT, Arc::new(ConfidentialityContract::new([certifier.public_key()])))
            .unwrap();
        let accounts =
            model.roles.iter().map(|r| (r.clone(), Account::from_seed(format!("acct-{r}").as_bytes()))).collect();
        Net { ledger, certifier, accounts, outsider: Account::from_seed(b"outsider") }
    }

    fn send(&mut self, who: &Account, target: &str, function: &str, args: Vec<u8>) -> Receipt {
        let nonce = self.ledger.next_nonce(&who.address());
        self.ledger.submit(Transaction::signed(who, target, function, args, nonce)).unwrap()
    }

    fn role(&self, r: &str) -> Account {
        self.accounts[r].clone()
    }

    fn register(&mut self, model: &ChoreographyModel) -> u64 {
        let kick = self.accounts.values().next().unwrap().clone();
        let args = ProcessClient::register_spec_args(&ProcessSpec::compile(model), &[0xcf; 32]);
        let rc = self.send(&kick, PROCESS_CONTRACT, "registerSpec", args);
        assert!(rc.status.is_success(), "{rc:?}");
        u64::from_le_bytes(rc.output.try_into().unwrap())
    }

    fn bindings(&self, pid: &str) -> Vec<(String, Address, Attestation)> {
        self.accounts
            .iter()
            .map(|(r, a)| {
                let att = Attestation::issue(&self.certifier, a.address(), r, AttestationScope::Instance(pid.into()));
                (r.clone(), a.address(), att)
            })
            .collect()
    }

    fn instantiate(&mut self, model: &ChoreographyModel) -> String {
        let spec = self.register(model);
        let pid = ProcessClient::new(&self.ledger).next_instance_id().unwrap();
        let kick = self.accounts.values().next().unwrap().clone();
        let rc =
            self.send(&kick, PROCESS_CONTRACT, "createInstance", ProcessClient::create_instance_args(spec, &self.bindings(&pid)));
        assert!(rc.status.is_success(), "{rc:?}");
        pid
    }

    /// Sends `msg` as its proper sender, routing confidential messages
    /// through the confidentiality contract.
    fn fire(&mut self, model: &ChoreographyModel, pid: &str, msg: &str, vars: &[(&str, Value)]) -> Receipt {
        let e = model.element(msg).unwrap();
        let who = self.role(e.sender.as_deref().unwrap());
        self.fire_as(&who, model, pid, msg, vars)
    }

    fn fire_as(&mut self, who: &Account, model: &ChoreographyModel, pid: &str, msg: &str, vars: &[(&str, Value)]) -> Receipt {
        let vars: Vec<(String, Value)> = vars.iter().map(|(n, v)| (n.to_string(), v.clone())).collect();
        if model.element(msg).is_some_and(|e| e.is_confidential()) {
            let args = ConfidentialityClient::record_confidential_args(pid, msg, &[7; 32], &[9; 32], &vars);
            self.send(who, CONFIDENTIALITY_CONTRACT, "recordConfidential", args)
        } else {
            self.send(who, PROCESS_CONTRACT, "updatePublicState", ProcessClient::update_public_state_args(pid, msg, &vars))
        }
    }

    fn enabled(&self, pid: &str) -> BTreeSet<String> {
        let st = ProcessClient::new(&self.ledger).instance_state(pid).unwrap();
        st.element_states.into_iter().filter(|(_, s)| *s == ElementState::Enabled).map(|(k, _)| k).collect()
    }
}

fn kind_of(rc: &Receipt) -> Option<RevertKind> {
    rc.revert_reason().and_then(RevertKind::of_reason)
}

fn s(v: &str) -> Value {
    Value::Str(v.into())
}

/// The happy path through the x-ray choreography without loops.
fn xray_path() -> Vec<(&'static str, Vec<(&'static str, Value)>)> {
    vec![
        ("prescription", vec![]),
        ("appointment_request", vec![("requestedDate", s("2024-05-01"))]),
        ("check_availability", vec![("accepted", Value::Bool(true)), ("date", s("2024-05-02"))]),
        ("confirm_appointment", vec![("appointmentDate", s("2024-05-02"))]),
        ("registration", vec![]),
        ("temperature", vec![("temperature", Value::Int(36))]),
        ("vaccine_certification", vec![]),
        ("xray_exam", vec![("examDone", Value::Bool(true))]),
        ("report", vec![]),
        ("results", vec![]),
    ]
}

#[test]
fn xray_happy_path_completes() {
    let m = fixtures::xray();
    let mut net = Net::new(&m);
    let pid = net.instantiate(&m);
    assert_eq!(pid, "PID1");
    assert_eq!(net.enabled(&pid), BTreeSet::from(["prescription".to_string()]));
    for (msg, vars) in xray_path() {
        let rc = net.fire(&m, &pid, msg, &vars);
        assert!(rc.status.is_success(), "{msg}: {rc:?}");
    }
    let st = ProcessClient::new(&net.ledger).instance_state(&pid).unwrap();
    assert!(st.is_completed());
    assert!(st.element_states.values().all(|s| *s != ElementState::Enabled));
    assert_eq!(st.public_vars["temperature"], Value::Int(36));
    assert_eq!(st.join_counters["g_checks_join"], 0);
    let rec = ConfidentialityClient::new(&net.ledger).record(&pid, "results").unwrap().unwrap();
    assert_eq!(rec.writer, net.role("WARD").address());
    assert_eq!(rec.payload_hash, [9; 32]);
}

#[test]
fn and_join_waits_for_both_branches_in_either_order() {
    let m = fixtures::xray();
    let path = xray_path();
    for swap in [false, true] {
        let mut net = Net::new(&m);
        let pid = net.instantiate(&m);
        for (msg, vars) in &path[..5] {
            assert!(net.fire(&m, &pid, msg, vars).status.is_success());
        }
        let (a, b) = if swap { (&path[6], &path[5]) } else { (&path[5], &path[6]) };
        assert!(net.fire(&m, &pid, a.0, &a.1).status.is_success());
        let client = ProcessClient::new(&net.ledger);
        assert_eq!(client.element_state(&pid, "g_checks_join").unwrap(), ElementState::Inactive);
        assert_eq!(client.instance_state(&pid).unwrap().join_counters["g_checks_join"], 1);
        assert_eq!(net.enabled(&pid), BTreeSet::from([b.0.to_string()]));
        assert!(net.fire(&m, &pid, b.0, &b.1).status.is_success());
        assert_eq!(net.enabled(&pid), BTreeSet::from(["xray_exam".to_string()]));
    }
}

#[test]
fn rejected_date_loops_back_and_re_enables() {
    let m = fixtures::xray();
    let mut net = Net::new(&m);
    let pid = net.instantiate(&m);
    let path = xray_path();
    for (msg, vars) in &path[..2] {
        assert!(net.fire(&m, &pid, msg, vars).status.is_success());
    }
    let rc = net.fire(&m, &pid, "check_availability", &[("accepted", Value::Bool(false)), ("date", s("-"))]);
    assert!(rc.status.is_success());
    assert_eq!(net.enabled(&pid), BTreeSet::from(["appointment_request".to_string()]));
    // Second round takes the accepted branch.
    for (msg, vars) in &path[1..] {
        assert!(net.fire(&m, &pid, msg, vars).status.is_success(), "{msg}");
    }
    assert!(ProcessClient::new(&net.ledger).instance_state(&pid).unwrap().is_completed());
}

#[test]
fn fever_sends_the_patient_back_to_scheduling() {
    let m = fixtures::xray();
    let mut net = Net::new(&m);
    let pid = net.instantiate(&m);
    let path = xray_path();
    for (msg, vars) in &path[..5] {
        assert!(net.fire(&m, &pid, msg, vars).status.is_success());
    }
    assert!(net.fire(&m, &pid, "temperature", &[("temperature", Value::Int(39))]).status.is_success());
    assert!(net.fire(&m, &pid, "vaccine_certification", &[]).status.is_success());
    assert_eq!(net.enabled(&pid), BTreeSet::from(["appointment_request".to_string()]));
}

#[test]
fn control_flow_guards() {
    let m = fixtures::xray();
    let mut net = Net::new(&m);
    let pid = net.instantiate(&m);

    // Out of order.
    let rc = net.fire(&m, &pid, "appointment_request", &[("requestedDate", s("x"))]);
    assert_eq!(kind_of(&rc), Some(RevertKind::NotEnabled));
    // Wrong sender.
    let ward = net.role("WARD");
    let rc = net.fire_as(&ward, &m, &pid, "prescription", &[]);
    assert_eq!(kind_of(&rc), Some(RevertKind::WrongSender));
    let outsider = net.outsider.clone();
    let rc = net.fire_as(&outsider, &m, &pid, "prescription", &[]);
    assert_eq!(kind_of(&rc), Some(RevertKind::WrongSender));
    // Confidential message straight to the process contract.
    let patient = net.role("PATIENT");
    let rc = net.send(&patient, PROCESS_CONTRACT, "updatePublicState", ProcessClient::update_public_state_args(&pid, "prescription", &[]));
    assert_eq!(kind_of(&rc), Some(RevertKind::ConfidentialRecordRequired));
    // Non-confidential message through the confidentiality contract.
    assert!(net.fire(&m, &pid, "prescription", &[]).status.is_success());
    let radiology = net.role("RADIOLOGY");
    let args = ConfidentialityClient::record_confidential_args(&pid, "appointment_request", &[0; 32], &[0; 32], &[]);
    let rc = net.send(&radiology, CONFIDENTIALITY_CONTRACT, "recordConfidential", args);
    assert_eq!(kind_of(&rc), Some(RevertKind::NotConfidential));

    let rc = net.fire(&m, &pid, "appointment_request", &[("requestedDate", Value::Int(3))]);
    assert_eq!(kind_of(&rc), Some(RevertKind::TypeMismatch));
    let rc = net.fire(&m, &pid, "appointment_request", &[("date", s("x"))]);
    assert_eq!(kind_of(&rc), Some(RevertKind::UndeclaredVariable));
    let rc = net.fire(&m, &pid, "appointment_request", &[("requestedDate", s("x")), ("requestedDate", s("y"))]);
    assert_eq!(kind_of(&rc), Some(RevertKind::DuplicateVariable));
    let rc = net.fire_as(&radiology, &m, &pid, "g_retry_merge", &[]);
    assert_eq!(kind_of(&rc), Some(RevertKind::NotAMessage));
    let rc = net.fire_as(&radiology, &m, &pid, "nope", &[]);
    assert_eq!(kind_of(&rc), Some(RevertKind::UnknownElement));
    let rc = net.fire_as(&radiology, &m, "PID99", "appointment_request", &[]);
    assert_eq!(kind_of(&rc), Some(RevertKind::UnknownInstance));

    // Reverts leave state untouched.
    assert_eq!(net.enabled(&pid), BTreeSet::from(["appointment_request".to_string()]));
    assert_eq!(ProcessClient::new(&net.ledger).public_var(&pid, "requestedDate").unwrap(), None);
}

#[test]
fn xor_split_on_unset_variable_reverts() {
    let m = fixtures::xray();
    let mut net = Net::new(&m);
    let pid = net.instantiate(&m);
    assert!(net.fire(&m, &pid, "prescription", &[]).status.is_success());
    assert!(net.fire(&m, &pid, "appointment_request", &[("requestedDate", s("d"))]).status.is_success());
    let rc = net.fire(&m, &pid, "check_availability", &[("date", s("d"))]);
    assert_eq!(kind_of(&rc), Some(RevertKind::UndefinedVariable));
}

#[test]
fn instantiation_guards() {
    let m = fixtures::xray();
    let mut net = Net::new(&m);
    let spec = net.register(&m);
    let kick = net.role("PATIENT");
    let pid = "PID1";

    let mut b = net.bindings(pid);
    b.pop();
    let rc = net.send(&kick, PROCESS_CONTRACT, "createInstance", ProcessClient::create_instance_args(spec, &b));
    assert_eq!(kind_of(&rc), Some(RevertKind::MissingRole));

    let mut b = net.bindings(pid);
    b[0].0 = "SURGEON".into();
    let rc = net.send(&kick, PROCESS_CONTRACT, "createInstance", ProcessClient::create_instance_args(spec, &b));
    assert_eq!(kind_of(&rc), Some(RevertKind::UnknownRole));

    let mut b = net.bindings(pid);
    let dup = b[0].clone();
    b.push(dup);
    let rc = net.send(&kick, PROCESS_CONTRACT, "createInstance", ProcessClient::create_instance_args(spec, &b));
    assert_eq!(kind_of(&rc), Some(RevertKind::DuplicateRole));

    // Attestation for another instance, a forged certifier and a swapped subject.
    let stale = net.bindings("PID7");
    let rc = net.send(&kick, PROCESS_CONTRACT, "createInstance", ProcessClient::create_instance_args(spec, &stale));
    assert_eq!(kind_of(&rc), Some(RevertKind::UnattestedBinding));
    let mut b = net.bindings(pid);
    b[1].2 = Attestation::issue(&net.outsider, b[1].1, &b[1].0, AttestationScope::Instance(pid.into()));
    let rc = net.send(&kick, PROCESS_CONTRACT, "createInstance", ProcessClient::create_instance_args(spec, &b));
    assert_eq!(kind_of(&rc), Some(RevertKind::UnattestedBinding));
    let mut b = net.bindings(pid);
    b[1].1 = net.outsider.address();
    let rc = net.send(&kick, PROCESS_CONTRACT, "createInstance", ProcessClient::create_instance_args(spec, &b));
    assert_eq!(kind_of(&rc), Some(RevertKind::UnattestedBinding));

    let outsider = net.outsider.clone();
    let rc = net.send(&outsider, PROCESS_CONTRACT, "createInstance", ProcessClient::create_instance_args(spec, &net.bindings(pid)));
    assert_eq!(kind_of(&rc), Some(RevertKind::NotAParticipant));

    let rc = net.send(&kick, PROCESS_CONTRACT, "createInstance", ProcessClient::create_instance_args(99, &net.bindings(pid)));
    assert_eq!(kind_of(&rc), Some(RevertKind::UnknownSpec));

    let args = ProcessClient::register_spec_args(&ProcessSpec::compile(&m), &[0xa9; 32]);
    let rc = net.send(&kick, PROCESS_CONTRACT, "registerSpec", args);
    assert_eq!(kind_of(&rc), Some(RevertKind::DuplicateSpec));

    assert_eq!(ProcessClient::new(&net.ledger).instance_count().unwrap(), 0);
}

#[test]
fn instance_ids_are_sequential_and_distinct() {
    let m = fixtures::retail();
    let mut net = Net::new(&m);
    let spec = net.register(&m);
    let kick = net.role("CUSTOMER");
    for n in 1..=3 {
        let pid = format!("PID{n}");
        let rc = net.send(&kick, PROCESS_CONTRACT, "createInstance", ProcessClient::create_instance_args(spec, &net.bindings(&pid)));
        assert!(rc.status.is_success());
    }
    assert_eq!(ProcessClient::new(&net.ledger).instance_ids().unwrap(), vec!["PID1", "PID2", "PID3"]);
}

#[test]
fn confidentiality_contract_bookkeeping() {
    let m = fixtures::xray();
    let mut net = Net::new(&m);
    let pid = net.instantiate(&m);
    let patient = net.role("PATIENT");

    let rc = net.send(&patient, CONFIDENTIALITY_CONTRACT, "storePolicyLocator", ConfidentialityClient::store_policy_locator_args(&pid, &[0xab; 32]));
    assert!(rc.status.is_success(), "{rc:?}");
    let rc = net.send(&patient, CONFIDENTIALITY_CONTRACT, "storePolicyLocator", ConfidentialityClient::store_policy_locator_args(&pid, &[0xcd; 32]));
    assert_eq!(kind_of(&rc), Some(RevertKind::LocatorAlreadySet));
    let outsider = net.outsider.clone();
    let rc = net.send(&outsider, CONFIDENTIALITY_CONTRACT, "storePolicyLocator", ConfidentialityClient::store_policy_locator_args("PID1", &[0x01; 32]));
    assert_eq!(kind_of(&rc), Some(RevertKind::NotAParticipant));

    let att = Attestation::issue(&net.certifier, patient.address(), "PATIENT", AttestationScope::Instance(pid.clone()));
    let rc = net.send(&patient, CONFIDENTIALITY_CONTRACT, "registerGrant", ConfidentialityClient::register_grant_args(&att));
    assert!(rc.status.is_success(), "{rc:?}");
    let rc = net.send(&patient, CONFIDENTIALITY_CONTRACT, "registerGrant", ConfidentialityClient::register_grant_args(&att));
    assert_eq!(kind_of(&rc), Some(RevertKind::DuplicateGrant));
    // Someone else's attestation, and a role the patient does not hold.
    let rc = net.send(&outsider, CONFIDENTIALITY_CONTRACT, "registerGrant", ConfidentialityClient::register_grant_args(&att));
    assert_eq!(kind_of(&rc), Some(RevertKind::BadAttestation));
    let wrong = Attestation::issue(&net.certifier, patient.address(), "WARD", AttestationScope::Instance(pid.clone()));
    let rc = net.send(&patient, CONFIDENTIALITY_CONTRACT, "registerGrant", ConfidentialityClient::register_grant_args(&wrong));
    assert_eq!(kind_of(&rc), Some(RevertKind::BadAttestation));

    let auditor = Attestation::issue(&net.certifier, outsider.address(), fixtures::MINISTRY_INSPECTOR, AttestationScope::Global);
    let rc = net.send(&outsider, CONFIDENTIALITY_CONTRACT, "registerGrant", ConfidentialityClient::register_grant_args(&auditor));
    assert!(rc.status.is_success());
    let rc = net.send(&outsider, CONFIDENTIALITY_CONTRACT, "logKeyRequest", ConfidentialityClient::log_key_request_args(&["MINISTRY-INSPECTOR".into()]));
    assert!(rc.status.is_success());

    let c = ConfidentialityClient::new(&net.ledger);
    assert_eq!(c.policy_locator(&pid).unwrap(), Some([0xab; 32]));
    assert_eq!(c.policy_locator("PID42").unwrap(), None);
    assert_eq!(c.grantees().unwrap(), vec![patient.address(), outsider.address()]);
    assert_eq!(c.grants(&outsider.address()).unwrap()[0].scope, AttestationScope::Global);
    let log = c.key_log().unwrap();
    assert_eq!(log.len(), 1);
    assert_eq!(log[0].requester, outsider.address());
    assert_eq!(log[0].attributes, vec!["MINISTRY-INSPECTOR"]);
}

/// Forwards `updatePublicState` to the process contract verbatim.
struct Rogue;

impl confetty::ledger::Contract for Rogue {
    fn execute(
        &self,
        ctx: &mut confetty::ledger::CallContext<'_>,
        function: &str,
        args: &[u8],
    ) -> Result<Vec<u8>, confetty::ledger::Revert> {
        ctx.call(PROCESS_CONTRACT, function, args)
    }

    fn query(
        &self,
        _: &confetty::ledger::StateView<'_>,
        f: &str,
        _: &[u8],
    ) -> Result<Vec<u8>, confetty::ledger::QueryError> {
        Err(confetty::ledger::QueryError::UnknownFunction(f.into()))
    }
}

#[test]
fn only_the_confidentiality_contract_may_proxy() {
    let m = fixtures::xray();
    let mut net = Net::new(&m);
    net.ledger.deploy("rogue", Arc::new(Rogue)).unwrap();
    let pid = net.instantiate(&m);
    assert!(net.fire(&m, &pid, "prescription", &[]).status.is_success());
    let radiology = net.role("RADIOLOGY");
    let args = ProcessClient::update_public_state_args(&pid, "appointment_request", &[("requestedDate".into(), s("d"))]);
    let rc = net.send(&radiology, "rogue", "updatePublicState", args);
    assert_eq!(kind_of(&rc), Some(RevertKind::UntrustedCaller));
}

#[test]
fn chain_replays_to_the_same_state() {
    let m = fixtures::xray();
    let mut net = Net::new(&m);
    let pid = net.instantiate(&m);
    for (msg, vars) in xray_path() {
        net.fire(&m, &pid, msg, &vars);
    }
    let certifier = net.certifier.public_key();
    let replayed = Ledger::replay(
        net.ledger.schedule().clone(),
        [
            (PROCESS_CONTRACT.to_string(), Arc::new(ProcessContract::new(1, [certifier])) as Arc<dyn confetty::ledger::Contract>),
            (CONFIDENTIALITY_CONTRACT.to_string(), Arc::new(ConfidentialityContract::new([certifier]))),
        ],
        net.ledger.blocks(),
    )
    .unwrap();
    assert_eq!(replayed.state_root(), net.ledger.state_root());
    assert_eq!(replayed.total_gas(), net.ledger.total_gas());
}

// --- token-game oracle -----------------------------------------------------

/// Reference interpreter of the token semantics on the model itself: a set of
/// enabled messages plus AND-join arrival counters.
struct Oracle<'m> {
    model: &'m ChoreographyModel,
    enabled: BTreeSet<String>,
    joins: BTreeMap<String, usize>,
    vars: BTreeMap<String, Value>,
}

impl<'m> Oracle<'m> {
    fn new(model: &'m ChoreographyModel) -> Self {
        Oracle { model, enabled: BTreeSet::from([model.start.clone()]), joins: BTreeMap::new(), vars: BTreeMap::new() }
    }

    fn fire(&mut self, msg: &str, vars: &[(&str, Value)]) -> bool {
        if !self.enabled.remove(msg) {
            return false;
        }
        for (n, v) in vars {
            self.vars.insert(n.to_string(), v.clone());
        }
        let mut work: Vec<String> = self.model.successors(msg).into_iter().map(String::from).collect();
        while let Some(id) = work.pop() {
            let e = self.model.element(&id).unwrap();
            match e.kind {
                ElementKind::Message => {
                    self.enabled.insert(id);
                }
                ElementKind::AndSplit | ElementKind::XorJoin => {
                    work.extend(self.model.successors(&id).into_iter().map(String::from))
                }
                ElementKind::AndJoin => {
                    let c = self.joins.entry(id.clone()).or_default();
                    *c += 1;
                    if *c == self.model.predecessors(&id).len() {
                        *c = 0;
                        work.extend(self.model.successors(&id).into_iter().map(String::from));
                    }
                }
                ElementKind::XorSplit => {
                    let taken = e
                        .branches
                        .iter()
                        .find(|b| match &b.condition {
                            BranchCondition::Expr(c) => c.evaluate(&self.vars[&c.variable]) == Some(true),
                            BranchCondition::Default => false,
                        })
                        .or_else(|| e.branches.iter().find(|b| b.condition == BranchCondition::Default))
                        .unwrap();
                    work.extend(taken.next.iter().cloned());
                }
            }
        }
        true
    }
}

fn xray_values(msg: &str, accept: bool, temp: i64) -> Vec<(&'static str, Value)> {
    match msg {
        "appointment_request" => vec![("requestedDate", s("d"))],
        "check_availability" => vec![("accepted", Value::Bool(accept)), ("date", s("d"))],
        "confirm_appointment" => vec![("appointmentDate", s("d"))],
        "temperature" => vec![("temperature", Value::Int(temp))],
        "xray_exam" => vec![("examDone", Value::Bool(true))],
        _ => vec![],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Random interleavings (including out-of-order attempts) agree with the
    /// oracle on which messages are enabled after every step.
    #[test]
    fn contract_matches_token_oracle(choices in proptest::collection::vec((0usize..16, any::<bool>(), 35i64..40), 1..40)) {
        let m = fixtures::xray();
        let mut net = Net::new(&m);
        let pid = net.instantiate(&m);
        let mut oracle = Oracle::new(&m);
        let messages: Vec<String> = m.messages().map(|e| e.id.clone()).collect();
        for (pick, accept, temp) in choices {
            let msg = if pick < messages.len() {
                messages[pick].clone()
            } else {
                // Bias toward progress: pick an enabled message.
                let en: Vec<_> = oracle.enabled.iter().cloned().collect();
                if en.is_empty() { break; }
                en[pick % en.len()].clone()
            };
            let vars = xray_values(&msg, accept, temp);
            let ok = oracle.fire(&msg, &vars);
            let rc = net.fire(&m, &pid, &msg, &vars);
            prop_assert_eq!(rc.status.is_success(), ok, "{} {:?}", msg, rc.status);
            prop_assert_eq!(net.enabled(&pid), oracle.enabled.clone());
            let st = ProcessClient::new(&net.ledger).instance_state(&pid).unwrap();
            prop_assert_eq!(st.is_completed(), oracle.enabled.is_empty());
        }
    }
}
