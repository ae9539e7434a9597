// SPDX-License-Identifier: Apache-2.0

//! Factory/proxy contract enforcing the control flow of every instance.
//!
//! Storage layout (all keys under the `process/` namespace):
//!
//! ```text
//! spec/count                    number of registered specs
//! spec/{id}                     compiled ProcessSpec blob
//! spec/{id}/locator             policy-bundle locator given at registration
//! spec/model/{modelId}          spec id, for duplicate detection
//! inst/count                    number of instances minted
//! inst/{pid}/header             spec id, kickstarter, start block
//! inst/{pid}/done               completion block
//! inst/{pid}/role/{r}           bound address of role index r
//! inst/{pid}/el/{i}/auth        authorized sender of message i
//! inst/{pid}/el/{i}/state       INACTIVE / ENABLED / COMPLETED
//! inst/{pid}/join/{i}           arrivals at AND join i
//! inst/{pid}/var/{name}         public variable (tag 0 = unset)
//! ```

use std::collections::{BTreeMap, BTreeSet};

use crate::ledger::abi::{AbiReader, AbiWriter};
use crate::ledger::{Address, CallContext, Caller, Contract, QueryError, Revert, StateView};
use crate::model::{ElementKind, Value};

use super::attestation::{Attestation, AttestationScope};
use super::spec::ProcessSpec;
use super::{bad_args, decode_value, encode_value, write_opt_value, ElementState, RevertKind, CONFIDENTIALITY_CONTRACT};

type R = RevertKind;

fn inst(pid: &str, rest: &str) -> String {
    format!("inst/{pid}/{rest}")
}

fn read_u64(bytes: Option<&[u8]>) -> u64 {
    bytes.and_then(|b| b.try_into().ok()).map(u64::from_le_bytes).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceHeader {
    pub spec_id: u64,
    pub kickstarter: Address,
    pub started_at: u64,
}

impl InstanceHeader {
    fn encode(&self) -> Vec<u8> {
        AbiWriter::raw().u64(self.spec_id).address(&self.kickstarter).u64(self.started_at).finish()
    }

    pub(crate) fn decode(bytes: &[u8]) -> Option<InstanceHeader> {
        let mut r = AbiReader::raw(bytes);
        let h = InstanceHeader { spec_id: r.u64().ok()?, kickstarter: r.address().ok()?, started_at: r.u64().ok()? };
        r.finish().ok()?;
        Some(h)
    }
}

pub struct ProcessContract {
    first_instance_number: u64,
    certifiers: BTreeSet<[u8; 32]>,
}

impl ProcessContract {
    pub fn new(first_instance_number: u64, certifiers: impl IntoIterator<Item = [u8; 32]>) -> Self {
        ProcessContract { first_instance_number, certifiers: certifiers.into_iter().collect() }
    }

    fn instance_id(&self, n: u64) -> String {
        format!("PID{}", self.first_instance_number + n)
    }
}

/// Storage access shared by execution and queries.
trait Store {
    fn read(&self, key: &str) -> Option<&[u8]>;
}

impl Store for CallContext<'_> {
    fn read(&self, key: &str) -> Option<&[u8]> {
        self.get(key)
    }
}

impl Store for StateView<'_> {
    fn read(&self, key: &str) -> Option<&[u8]> {
        self.get(key)
    }
}

fn load_spec(s: &impl Store, spec_id: u64) -> Option<ProcessSpec> {
    ProcessSpec::decode(s.read(&format!("spec/{spec_id}"))?).ok()
}

fn load_instance(s: &impl Store, pid: &str) -> Option<(InstanceHeader, ProcessSpec)> {
    let header = InstanceHeader::decode(s.read(&inst(pid, "header"))?)?;
    let spec = load_spec(s, header.spec_id)?;
    Some((header, spec))
}

fn element_state(s: &impl Store, pid: &str, i: usize) -> ElementState {
    s.read(&inst(pid, &format!("el/{i}/state")))
        .and_then(|b| b.first().copied())
        .and_then(ElementState::from_code)
        .unwrap_or(ElementState::Inactive)
}

fn join_count(s: &impl Store, pid: &str, i: usize) -> u32 {
    s.read(&inst(pid, &format!("join/{i}")))
        .and_then(|b| b.try_into().ok())
        .map(u32::from_le_bytes)
        .unwrap_or(0)
}

fn read_var(s: &impl Store, pid: &str, name: &str) -> Option<Option<Value>> {
    s.read(&inst(pid, &format!("var/{name}"))).and_then(|b| decode_value(b).ok())
}

fn set_if_changed(ctx: &mut CallContext<'_>, key: &str, value: Vec<u8>) {
    if ctx.get(key) != Some(value.as_slice()) {
        ctx.set(key, value);
    }
}

fn set_state(ctx: &mut CallContext<'_>, pid: &str, i: usize, st: ElementState) {
    set_if_changed(ctx, &inst(pid, &format!("el/{i}/state")), vec![st.code()]);
}

impl ProcessContract {
    fn register_spec(&self, ctx: &mut CallContext<'_>, args: &[u8]) -> Result<Vec<u8>, Revert> {
        let mut r = AbiReader::new(args).map_err(bad_args)?;
        let blob = r.bytes().map_err(bad_args)?.to_vec();
        let locator = r.fixed(32).map_err(bad_args)?.to_vec();
        r.finish().map_err(bad_args)?;
        let spec = ProcessSpec::decode(&blob).map_err(|e| R::InvalidSpec.revert(e))?;

        let model_key = format!("spec/model/{}", spec.model_id);
        if let Some(existing) = ctx.get(&model_key) {
            return Err(R::DuplicateSpec.revert(format!("model `{}` is spec {}", spec.model_id, read_u64(Some(existing)))));
        }
        let id = read_u64(ctx.get("spec/count"));
        ctx.set("spec/count", (id + 1).to_le_bytes().to_vec());
        ctx.set(&format!("spec/{id}"), blob);
        ctx.set(&format!("spec/{id}/locator"), locator);
        ctx.set(&model_key, id.to_le_bytes().to_vec());
        Ok(id.to_le_bytes().to_vec())
    }

    fn create_instance(&self, ctx: &mut CallContext<'_>, args: &[u8]) -> Result<Vec<u8>, Revert> {
        let mut r = AbiReader::new(args).map_err(bad_args)?;
        let spec_id = r.u64().map_err(bad_args)?;
        let n = r.count().map_err(bad_args)?;
        let mut bindings = Vec::with_capacity(n);
        for _ in 0..n {
            let role = r.string().map_err(bad_args)?;
            let addr = r.address().map_err(bad_args)?;
            let att = Attestation::read(&mut r).map_err(bad_args)?;
            bindings.push((role, addr, att));
        }
        r.finish().map_err(bad_args)?;

        let spec = load_spec(ctx, spec_id).ok_or_else(|| R::UnknownSpec.revert(spec_id))?;
        let count = read_u64(ctx.get("inst/count"));
        let pid = self.instance_id(count);

        let mut bound: BTreeMap<usize, Address> = BTreeMap::new();
        for (role, addr, _) in &bindings {
            let idx = spec.role_index(role).ok_or_else(|| R::UnknownRole.revert(role))?;
            if bound.insert(idx, *addr).is_some() {
                return Err(R::DuplicateRole.revert(role));
            }
        }
        if let Some(missing) = spec.roles.iter().enumerate().find(|(i, _)| !bound.contains_key(i)) {
            return Err(R::MissingRole.revert(missing.1));
        }
        let scope = AttestationScope::Instance(pid.clone());
        for (role, addr, att) in &bindings {
            let ok = self.certifiers.contains(&att.certifier)
                && att.subject == *addr
                && att.role == *role
                && att.scope == scope
                && att.signature_valid();
            if !ok {
                return Err(R::UnattestedBinding.revert(format!("{role} -> {addr} for {pid}")));
            }
        }
        if !bound.values().any(|a| *a == ctx.origin) {
            return Err(R::NotAParticipant.revert(ctx.origin));
        }

        ctx.set("inst/count", (count + 1).to_le_bytes().to_vec());
        let header = InstanceHeader { spec_id, kickstarter: ctx.origin, started_at: ctx.block_number };
        ctx.set(&inst(&pid, "header"), header.encode());
        for (idx, addr) in &bound {
            ctx.set(&inst(&pid, &format!("role/{idx}")), addr.0.to_vec());
        }
        for (i, e) in spec.elements.iter().enumerate() {
            if e.is_message() {
                ctx.set(&inst(&pid, &format!("el/{i}/auth")), bound[&(e.sender as usize)].0.to_vec());
            }
            let st = if i == spec.start as usize { ElementState::Enabled } else { ElementState::Inactive };
            ctx.set(&inst(&pid, &format!("el/{i}/state")), vec![st.code()]);
            if e.kind == ElementKind::AndJoin {
                ctx.set(&inst(&pid, &format!("join/{i}")), 0u32.to_le_bytes().to_vec());
            }
        }
        for v in spec.public_variables() {
            ctx.set(&inst(&pid, &format!("var/{}", v.name)), encode_value(None));
        }
        Ok(AbiWriter::raw().str(&pid).finish())
    }

    fn update_public_state(&self, ctx: &mut CallContext<'_>, args: &[u8]) -> Result<Vec<u8>, Revert> {
        let (sender, via_record) = match &ctx.caller {
            Caller::Account(a) => (*a, false),
            Caller::Contract(c) if c == CONFIDENTIALITY_CONTRACT => (ctx.origin, true),
            Caller::Contract(c) => return Err(R::UntrustedCaller.revert(c)),
        };
        let mut r = AbiReader::new(args).map_err(bad_args)?;
        let pid = r.string().map_err(bad_args)?;
        let msg = r.string().map_err(bad_args)?;
        let n = r.count().map_err(bad_args)?;
        let mut vars = Vec::with_capacity(n);
        for _ in 0..n {
            let name = r.string().map_err(bad_args)?;
            let value = super::read_opt_value(&mut r)
                .map_err(bad_args)?
                .ok_or_else(|| R::BadArguments.revert(format!("variable `{name}` without a value")))?;
            vars.push((name, value));
        }
        r.finish().map_err(bad_args)?;

        let (_, spec) = load_instance(ctx, &pid).ok_or_else(|| R::UnknownInstance.revert(&pid))?;
        let idx = spec.element_index(&msg).ok_or_else(|| R::UnknownElement.revert(&msg))?;
        let el = &spec.elements[idx];

        // Guards run before any write, so a revert can never leave partial updates.
        if !el.is_message() {
            return Err(R::NotAMessage.revert(&msg));
        }
        let auth = ctx.get(&inst(&pid, &format!("el/{idx}/auth"))).map(|b| Address(b.try_into().unwrap_or_default()));
        if auth != Some(sender) {
            return Err(R::WrongSender.revert(format!("{sender} may not send `{msg}`")));
        }
        let state = element_state(ctx, &pid, idx);
        if state != ElementState::Enabled {
            return Err(R::NotEnabled.revert(format!("`{msg}` is {state}")));
        }
        if el.is_confidential() && !via_record {
            return Err(R::ConfidentialRecordRequired.revert(&msg));
        }
        let mut seen = BTreeSet::new();
        for (name, value) in &vars {
            let decl = el.var(name).ok_or_else(|| R::UndeclaredVariable.revert(format!("`{name}` in `{msg}`")))?;
            if decl.confidential {
                return Err(R::ConfidentialVarInPublicUpdate.revert(name));
            }
            if decl.value_type != value.value_type() {
                return Err(R::TypeMismatch.revert(format!("`{name}` is {}", decl.value_type)));
            }
            if !seen.insert(name.as_str()) {
                return Err(R::DuplicateVariable.revert(name));
            }
        }

        for (name, value) in &vars {
            set_if_changed(ctx, &inst(&pid, &format!("var/{name}")), encode_value(Some(value)));
        }
        activate_next(ctx, &pid, &spec, idx)?;
        Ok(Vec::new())
    }
}

fn activate_next(ctx: &mut CallContext<'_>, pid: &str, spec: &ProcessSpec, done: usize) -> Result<(), Revert> {
    set_state(ctx, pid, done, ElementState::Completed);
    for &s in &spec.elements[done].successors {
        activate(ctx, pid, spec, s as usize)?;
    }
    let idle = (0..spec.elements.len()).all(|i| {
        element_state(ctx, pid, i) != ElementState::Enabled
            && (spec.elements[i].kind != ElementKind::AndJoin || join_count(ctx, pid, i) == 0)
    });
    if idle {
        ctx.set(&inst(pid, "done"), ctx.block_number.to_le_bytes().to_vec());
    }
    Ok(())
}

fn activate(ctx: &mut CallContext<'_>, pid: &str, spec: &ProcessSpec, i: usize) -> Result<(), Revert> {
    if spec.elements[i].is_message() {
        // Includes re-enabling a COMPLETED message reached through a loop.
        set_state(ctx, pid, i, ElementState::Enabled);
        Ok(())
    } else {
        execute_gateway(ctx, pid, spec, i)
    }
}

fn execute_gateway(ctx: &mut CallContext<'_>, pid: &str, spec: &ProcessSpec, g: usize) -> Result<(), Revert> {
    let el = &spec.elements[g];
    let targets: Vec<u32> = match el.kind {
        ElementKind::XorSplit => {
            let mut chosen = None;
            for b in &el.branches {
                let Some(c) = &b.condition else { continue };
                let value = read_var(ctx, pid, &c.variable)
                    .flatten()
                    .ok_or_else(|| R::UndefinedVariable.revert(format!("`{}` at `{}`", c.variable, el.id)))?;
                match c.evaluate(&value) {
                    Some(true) => {
                        chosen = Some(&b.targets);
                        break;
                    }
                    Some(false) => {}
                    None => return Err(R::TypeMismatch.revert(format!("`{}` at `{}`", c.variable, el.id))),
                }
            }
            let chosen = chosen
                .or_else(|| el.branches.iter().find(|b| b.condition.is_none()).map(|b| &b.targets))
                .ok_or_else(|| R::NoBranchMatched.revert(&el.id))?;
            chosen.clone()
        }
        ElementKind::AndJoin => {
            let arrived = join_count(ctx, pid, g) + 1;
            let key = inst(pid, &format!("join/{g}"));
            if arrived < el.incoming {
                ctx.set(&key, arrived.to_le_bytes().to_vec());
                return Ok(());
            }
            set_if_changed(ctx, &key, 0u32.to_le_bytes().to_vec());
            el.successors.clone()
        }
        ElementKind::AndSplit | ElementKind::XorJoin => el.successors.clone(),
        ElementKind::Message => unreachable!("messages are not gateways"),
    };
    set_state(ctx, pid, g, ElementState::Completed);
    for t in targets {
        activate(ctx, pid, spec, t as usize)?;
    }
    Ok(())
}

impl Contract for ProcessContract {
    fn execute(&self, ctx: &mut CallContext<'_>, function: &str, args: &[u8]) -> Result<Vec<u8>, Revert> {
        match function {
            "registerSpec" => self.register_spec(ctx, args),
            "createInstance" => self.create_instance(ctx, args),
            "updatePublicState" => self.update_public_state(ctx, args),
            f => Err(R::UnknownFunction.revert(f)),
        }
    }

    fn query(&self, view: &StateView<'_>, function: &str, args: &[u8]) -> Result<Vec<u8>, QueryError> {
        let fail = |kind: RevertKind, d: &dyn std::fmt::Display| QueryError::Failed(format!("{kind}: {d}"));
        let mut r = AbiReader::new(args).map_err(|e| fail(R::BadArguments, &e))?;
        let instance = |r: &mut AbiReader<'_>| {
            let pid = r.string().map_err(|e| fail(R::BadArguments, &e))?;
            let (h, spec) = load_instance(view, &pid).ok_or_else(|| fail(R::UnknownInstance, &pid))?;
            Ok::<_, QueryError>((pid, h, spec))
        };
        let element = |r: &mut AbiReader<'_>, spec: &ProcessSpec| {
            let id = r.string().map_err(|e| fail(R::BadArguments, &e))?;
            spec.element_index(&id).ok_or_else(|| fail(R::UnknownElement, &id))
        };
        match function {
            "specCount" => Ok(read_u64(view.get("spec/count")).to_le_bytes().to_vec()),
            "spec" => {
                let id = r.u64().map_err(|e| fail(R::BadArguments, &e))?;
                view.get(&format!("spec/{id}")).map(<[u8]>::to_vec).ok_or_else(|| fail(R::UnknownSpec, &id))
            }
            "specLocator" => {
                let id = r.u64().map_err(|e| fail(R::BadArguments, &e))?;
                view.get(&format!("spec/{id}/locator")).map(<[u8]>::to_vec).ok_or_else(|| fail(R::UnknownSpec, &id))
            }
            "specByModel" => {
                let m = r.string().map_err(|e| fail(R::BadArguments, &e))?;
                view.get(&format!("spec/model/{m}")).map(<[u8]>::to_vec).ok_or_else(|| fail(R::UnknownSpec, &m))
            }
            "instanceCount" => Ok(read_u64(view.get("inst/count")).to_le_bytes().to_vec()),
            "nextInstanceId" => {
                Ok(AbiWriter::raw().str(&self.instance_id(read_u64(view.get("inst/count")))).finish())
            }
            "instanceId" => {
                let n = r.u64().map_err(|e| fail(R::BadArguments, &e))?;
                if n >= read_u64(view.get("inst/count")) {
                    return Err(fail(R::UnknownInstance, &n));
                }
                Ok(AbiWriter::raw().str(&self.instance_id(n)).finish())
            }
            "header" => {
                let (pid, ..) = instance(&mut r)?;
                Ok(view.get(&inst(&pid, "header")).unwrap_or_default().to_vec())
            }
            "instanceState" => {
                let (pid, h, spec) = instance(&mut r)?;
                let done = view.get(&inst(&pid, "done"));
                let mut w = AbiWriter::raw().u64(h.spec_id).u64(h.started_at);
                w = match done {
                    Some(b) => w.u8(1).u64(read_u64(Some(b))),
                    None => w.u8(0),
                };
                w = w.len(spec.elements.len());
                for (i, e) in spec.elements.iter().enumerate() {
                    w = w.str(&e.id).u8(element_state(view, &pid, i).code());
                }
                w = w.len(spec.roles.len());
                for (i, role) in spec.roles.iter().enumerate() {
                    let addr = view.get(&inst(&pid, &format!("role/{i}"))).unwrap_or(&[0; 20]);
                    w = w.str(role).fixed(addr);
                }
                let joins: Vec<usize> =
                    (0..spec.elements.len()).filter(|&i| spec.elements[i].kind == ElementKind::AndJoin).collect();
                w = w.len(joins.len());
                for i in joins {
                    w = w.str(&spec.elements[i].id).u32(join_count(view, &pid, i));
                }
                let vars = spec.public_variables();
                w = w.len(vars.len());
                for v in vars {
                    w = write_opt_value(w.str(&v.name), read_var(view, &pid, &v.name).flatten().as_ref());
                }
                Ok(w.finish())
            }
            "elementState" => {
                let (pid, _, spec) = instance(&mut r)?;
                let i = element(&mut r, &spec)?;
                Ok(vec![element_state(view, &pid, i).code()])
            }
            "elementInfo" => {
                let (pid, _, spec) = instance(&mut r)?;
                let i = element(&mut r, &spec)?;
                let e = &spec.elements[i];
                let auth = view.get(&inst(&pid, &format!("el/{i}/auth"))).unwrap_or(&[0; 20]);
                Ok(AbiWriter::raw()
                    .u8(e.kind.code())
                    .bool(e.is_confidential())
                    .fixed(auth)
                    .u8(element_state(view, &pid, i).code())
                    .finish())
            }
            "publicVar" => {
                let (pid, _, spec) = instance(&mut r)?;
                let name = r.string().map_err(|e| fail(R::BadArguments, &e))?;
                if !spec.public_variables().iter().any(|v| v.name == name) {
                    return Err(fail(R::UndeclaredVariable, &name));
                }
                Ok(encode_value(read_var(view, &pid, &name).flatten().as_ref()))
            }
            "isParticipant" => {
                let (pid, _, spec) = instance(&mut r)?;
                let who = r.address().map_err(|e| fail(R::BadArguments, &e))?;
                let found = (0..spec.roles.len()).any(|i| view.get(&inst(&pid, &format!("role/{i}"))) == Some(&who.0[..]));
                Ok(vec![found as u8])
            }
            "roleBinding" => {
                let (pid, _, spec) = instance(&mut r)?;
                let role = r.string().map_err(|e| fail(R::BadArguments, &e))?;
                let i = spec.role_index(&role).ok_or_else(|| fail(R::UnknownRole, &role))?;
                Ok(view.get(&inst(&pid, &format!("role/{i}"))).unwrap_or_default().to_vec())
            }
            f => Err(QueryError::UnknownFunction(f.to_string())),
        }
    }
}
