// SPDX-License-Identifier: Apache-2.0

mod workspace;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use confetty::abe::AbKey;
use confetty::bench::{
    self, run_scenario, write_bench_outputs, BenchOptions, BenchReport, RunOptions, ScenarioScript,
};
use confetty::contracts::{Attestation, AttestationScope, ElementState, ProcessClient};
use confetty::engine::{EngineError, ParticipantRegistration, PublicValue};
use confetty::fixtures;
use confetty::ledger::export::{read_chain, write_chain, write_receipts_csv};
use confetty::ledger::{verify_blocks, Receipt};
use confetty::model::{parse_model, serialize_model, ChoreographyModel, Value};
use confetty::policy::PolicyAst;
use serde::Deserialize;
use serde_json::{json, Value as Json};

use workspace::Workspace;

#[derive(Parser)]
#[command(name = "confetty", version, about = "Choreographies on a local ledger with ABE-protected payloads")]
struct Cli {
    /// Workspace directory holding config, chain and content store.
    #[arg(long, global = true, default_value = ".confetty")]
    workspace: PathBuf,
    /// Seed used when the workspace is created.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register a model and its confidentiality policies.
    Configure {
        /// Model file, or one of the built-in fixtures: xray, incident, retail.
        model: String,
        #[arg(long, value_delimiter = ',')]
        auditors: Vec<String>,
        #[arg(long = "as", default_value = "owner")]
        owner: String,
        /// Override a generated policy: `message=EXPR`.
        #[arg(long = "policy")]
        policies: Vec<String>,
    },
    /// Start an instance of a registered deployment.
    Instantiate {
        deployment: u64,
        /// JSON: {"kickstarter": ..., "participants": {ROLE: actor}, "auditors": {actor: ROLE}}
        #[arg(long)]
        bindings: PathBuf,
    },
    /// Send a message of an instance.
    Transact {
        instance: String,
        message: String,
        #[arg(long = "as")]
        actor: String,
        /// Encrypt this file as the message payload.
        #[arg(long)]
        confidential: Option<PathBuf>,
        /// Public variable assignment `name=value`.
        #[arg(long = "var")]
        vars: Vec<String>,
    },
    /// Read a public variable or element state, or decrypt a message with --key.
    Inspect {
        instance: String,
        target: String,
        #[arg(long)]
        key: Option<PathBuf>,
        /// Write decrypted bytes here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Request a notarized decryption key covering every attribute granted to an actor.
    Keygen {
        #[arg(long = "as")]
        actor: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scaling experiments.
    Bench {
        #[command(subcommand)]
        kind: BenchKind,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
        #[arg(long, global = true, default_value_t = 1)]
        repeats: usize,
        #[arg(long, global = true, default_value_t = 1024)]
        payload_bytes: usize,
    },
    /// Write the chain, receipts and instance states to a directory.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
    /// Check hash links and signatures, then replay the chain.
    VerifyChain {
        /// Verify this export instead of the workspace chain.
        #[arg(long)]
        chain: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BenchKind {
    /// Gas and time per phase as the number of participants grows
    Participants {
        #[arg(long, default_value = "xray")]
        model: String,
        #[arg(long, default_value_t = 2)]
        from: usize,
        #[arg(long, default_value_t = 10)]
        to: usize,
    },
    /// Gas and time per phase for k disjoint copies of a model
    Size {
        #[arg(long, default_value = "xray")]
        model: String,
        #[arg(long, default_value_t = 10)]
        max_k: usize,
    },
    /// Gas and time per phase by confidential payload size in bytes
    Payload {
        #[arg(long, default_value = "xray")]
        model: String,
        #[arg(long, value_delimiter = ',', default_value = "256,1024,4096,16384,65536")]
        sizes: Vec<usize>,
    },
    /// Gas and time per phase on synthetic models with a given gateway count
    Gateways {
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8,10")]
        counts: Vec<usize>,
    },
}

/// Machine-readable error, printed to stderr as one JSON object.
#[derive(Debug)]
pub struct Failure {
    kind: String,
    message: String,
}

impl Failure {
    pub fn new(kind: &str, message: impl Into<String>) -> Failure {
        Failure { kind: kind.into(), message: message.into() }
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Failure {
        let kind = match e.revert_kind() {
            Some(k) => format!("{k:?}"),
            None => {
                let dbg = format!("{e:?}");
                dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Engine").to_string()
            }
        };
        Failure { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::new("Io", e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Failure {
        Failure::new("Io", e.to_string())
    }
}

fn load_model(reference: &str) -> Result<(ChoreographyModel, String), Failure> {
    let text = match fixtures::document(reference) {
        Some(doc) => doc.to_string(),
        None => fs::read_to_string(reference)?,
    };
    let model = parse_model(text.as_bytes()).map_err(|e| Failure::new("Model", e.to_string()))?;
    Ok((model, text))
}

fn receipt_json(rc: &Receipt) -> Json {
    json!({
        "tx": hex::encode(rc.tx_hash),
        "function": rc.function,
        "block": rc.block_number,
        "gas": rc.gas_used,
        "status": if rc.status.is_success() { "SUCCESS" } else { "REVERTED" },
    })
}

fn value_json(v: &Value) -> Json {
    match v {
        Value::Bool(b) => json!(b),
        Value::Int(i) => json!(i),
        Value::Str(s) => json!(s),
    }
}

fn state_name(s: ElementState) -> &'static str {
    match s {
        ElementState::Inactive => "INACTIVE",
        ElementState::Enabled => "ENABLED",
        ElementState::Completed => "COMPLETED",
    }
}

fn key_to_json(key: &AbKey) -> Json {
    let attrs: BTreeMap<&String, String> = key.attribute_secrets.iter().map(|(a, s)| (a, hex::encode(s))).collect();
    json!({ "user": key.user_gid, "attributes": attrs })
}

fn key_from_file(path: &Path) -> Result<AbKey, Failure> {
    #[derive(Deserialize)]
    struct KeyFile {
        user: String,
        attributes: BTreeMap<String, String>,
    }
    let bad = |m: String| Failure::new("KeyFile", m);
    let kf: KeyFile = serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| bad(e.to_string()))?;
    let mut attribute_secrets = BTreeMap::new();
    for (a, h) in kf.attributes {
        let mut s = [0u8; 32];
        hex::decode_to_slice(&h, &mut s).map_err(|_| bad(format!("bad secret for `{a}`")))?;
        attribute_secrets.insert(a, s);
    }
    Ok(AbKey { user_gid: kf.user, attribute_secrets })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Bindings {
    kickstarter: String,
    participants: BTreeMap<String, String>,
    #[serde(default)]
    auditors: BTreeMap<String, String>,
}

fn configure(ws: &Workspace, model: &str, auditors: &[String], owner: &str, overrides: &[String]) -> Result<Json, Failure> {
    let (_, text) = load_model(model)?;
    let mut parsed = Vec::new();
    for o in overrides {
        let (msg, expr) = o.split_once('=').ok_or_else(|| Failure::new("Usage", format!("--policy `{o}`: expected message=EXPR")))?;
        let p: PolicyAst = expr.parse().map_err(|e: confetty::policy::PolicyError| Failure::new("Policy", e.to_string()))?;
        parsed.push((msg.trim().to_string(), p));
    }
    let dep = ws.engine.configure(&ws.actor(owner), text.as_bytes(), auditors, |_, policies| {
        policies.extend(parsed);
        true
    })?;
    let policies: BTreeMap<&String, String> = dep.policy_map.iter().map(|(m, p)| (m, p.to_string())).collect();
    Ok(json!({
        "deployment": dep.spec_id,
        "model": dep.model.id,
        "policy_locator": dep.policy_locator.to_string(),
        "policies": policies,
        "receipt": dep.receipt.as_ref().map(receipt_json),
    }))
}

fn instantiate(ws: &Workspace, deployment: u64, bindings: &Path) -> Result<Json, Failure> {
    let b: Bindings = serde_json::from_str(&fs::read_to_string(bindings)?)
        .map_err(|e| Failure::new("Bindings", e.to_string()))?;
    let certifier = ws.certifier();
    let mut receipts = Vec::new();
    for (actor, role) in &b.auditors {
        let account = ws.actor(actor);
        if !ws.engine.grants(&account.address()).contains(role) {
            let att = Attestation::issue(&certifier, account.address(), role, AttestationScope::Global);
            receipts.push(receipt_json(&ws.engine.register_auditor(&account, &att)?));
        }
    }
    let pid = ws.engine.next_instance_id()?;
    let regs: Vec<ParticipantRegistration> = b
        .participants
        .iter()
        .map(|(role, actor)| {
            let account = ws.actor(actor);
            let attestation = Attestation::issue(&certifier, account.address(), role, AttestationScope::Instance(pid.clone()));
            ParticipantRegistration { account, role: role.clone(), attestation }
        })
        .collect();
    let inst = ws.engine.instantiate(deployment, &regs, &ws.actor(&b.kickstarter))?;
    receipts.extend(inst.receipts.iter().map(receipt_json));
    Ok(json!({ "instance": inst.instance_id, "receipts": receipts }))
}

fn instance_model(ws: &Workspace, pid: &str) -> Result<ChoreographyModel, Failure> {
    let spec = ws.engine.instance_state(pid)?.spec_id;
    Ok(ws.engine.deployment(spec).ok_or(EngineError::UnknownDeployment(spec))?.model)
}

fn transact(
    ws: &Workspace,
    pid: &str,
    message: &str,
    actor: &str,
    payload: Option<&Path>,
    raw_vars: &[String],
) -> Result<Json, Failure> {
    let model = instance_model(ws, pid)?;
    let table = model.variable_table();
    let mut vars = Vec::new();
    for v in raw_vars {
        let (name, text) = v.split_once('=').ok_or_else(|| Failure::new("Usage", format!("--var `{v}`: expected name=value")))?;
        let decl = table.get(name).ok_or_else(|| Failure::new("UndeclaredVariable", format!("`{name}` is not declared")))?;
        let value = Value::parse_as(text, decl.value_type)
            .ok_or_else(|| Failure::new("TypeMismatch", format!("`{text}` is not a {}", decl.value_type)))?;
        vars.push((name.to_string(), value));
    }
    let who = ws.actor(actor);
    let (rc, cid) = match payload {
        Some(path) => {
            let data = fs::read(path)?;
            let (cid, rc) = ws.engine.transact_confidential(pid, message, &who, &data, &vars)?;
            (rc, Some(cid.to_string()))
        }
        None => (ws.engine.transact_public(pid, message, &who, &vars)?, None),
    };
    Ok(json!({ "receipt": receipt_json(&rc), "content_id": cid }))
}

fn inspect(ws: &Workspace, pid: &str, target: &str, key: Option<&Path>, out: Option<&Path>) -> Result<Option<Json>, Failure> {
    let Some(key) = key else {
        let v = match ws.engine.inspect_public(pid, target)? {
            PublicValue::Variable(v) => json!({ "variable": target, "value": v.as_ref().map(value_json) }),
            PublicValue::Element(s) => json!({ "element": target, "state": state_name(s) }),
        };
        return Ok(Some(v));
    };
    let plain = ws.engine.inspect_confidential(&key_from_file(key)?, pid, target)?;
    match out {
        Some(p) => {
            fs::write(p, &plain)?;
            Ok(Some(json!({ "message": target, "bytes": plain.len(), "written": p })))
        }
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&plain)?;
            Ok(None)
        }
    }
}

fn keygen(ws: &Workspace, actor: &str, out: Option<&Path>) -> Result<Json, Failure> {
    let (key, rc) = ws.engine.request_full_key(&ws.actor(actor))?;
    let body = key_to_json(&key);
    match out {
        Some(p) => {
            fs::write(p, serde_json::to_string_pretty(&body).expect("json"))?;
            Ok(json!({ "key": p, "attributes": key.attribute_secrets.keys().collect::<Vec<_>>(), "receipt": receipt_json(&rc) }))
        }
        None => Ok(json!({ "key": body, "receipt": receipt_json(&rc) })),
    }
}

fn run_bench(kind: &BenchKind, opts: &BenchOptions, out: &Path) -> Result<Json, Failure> {
    let fail = |e: bench::BenchError| Failure::new("Bench", e.to_string());
    let (name, reports, base): (&str, Vec<BenchReport>, ChoreographyModel) = match kind {
        BenchKind::Participants { model, from, to } => {
            let (m, _) = load_model(model)?;
            let counts: Vec<usize> = (*from..=*to).collect();
            ("participants", bench::bench_participants(&m, &counts, opts).map_err(fail)?, m)
        }
        BenchKind::Size { model, max_k } => {
            let (m, _) = load_model(model)?;
            let ks: Vec<usize> = (1..=*max_k).collect();
            ("size", bench::bench_model_size(&m, &ks, opts).map_err(fail)?, m)
        }
        BenchKind::Payload { model, sizes } => {
            let (m, _) = load_model(model)?;
            ("payload", bench::bench_payload(&m, sizes, opts).map_err(fail)?, m)
        }
        BenchKind::Gateways { counts } => {
            let first = confetty::synth::gateway_model(counts.first().copied().unwrap_or(2));
            ("gateways", bench::bench_gateways(counts, opts).map_err(fail)?, first)
        }
    };
    // The chain of one representative run ships with the CSVs.
    let auditors: Vec<&str> = opts.auditors.iter().map(String::as_str).collect();
    let script = ScenarioScript::for_model(&base, &auditors, opts.payload_bytes);
    let run = run_scenario(&script, &RunOptions { seed: opts.seed, ..RunOptions::default() })
        .map_err(|e| Failure::new("Bench", e.to_string()))?;
    let files = write_bench_outputs(out, name, &reports, Some(&run.engine.blocks()))?;
    print!("{}", bench::summary_table(name, &reports));
    let ok = reports.iter().all(|r| r.chain_verified && r.gate_holds);
    if !ok {
        return Err(Failure::new("Bench", "a run failed chain verification or the confidentiality gate"));
    }
    Ok(json!({ "written": files }))
}

fn export(ws: &Workspace, out: &Path) -> Result<Json, Failure> {
    fs::create_dir_all(out)?;
    let blocks = ws.engine.blocks();
    write_chain(&blocks, fs::File::create(out.join("chain.ndjson"))?)?;
    write_receipts_csv(&ws.engine.receipts(), fs::File::create(out.join("receipts.csv"))?)?;
    let (deployments, instances) = ws.engine.with_ledger(|l| -> Result<(Json, Json), Failure> {
        let pc = ProcessClient::new(l);
        let mut deps = Vec::new();
        for d in ws.engine.deployments() {
            let policies: BTreeMap<&String, String> = d.policy_map.iter().map(|(m, p)| (m, p.to_string())).collect();
            deps.push(json!({
                "deployment": d.spec_id,
                "model": serde_json::from_str::<Json>(&serialize_model(&d.model)).expect("model json"),
                "policy_locator": d.policy_locator.to_string(),
                "policies": policies,
            }));
        }
        let mut insts = Vec::new();
        for pid in pc.instance_ids().map_err(EngineError::from)? {
            let st = pc.instance_state(&pid).map_err(EngineError::from)?;
            let elements: BTreeMap<&String, &str> = st.element_states.iter().map(|(k, s)| (k, state_name(*s))).collect();
            let vars: BTreeMap<&String, Json> = st.public_vars.iter().map(|(k, v)| (k, value_json(v))).collect();
            let roles: BTreeMap<&String, String> = st.role_bindings.iter().map(|(r, a)| (r, a.to_string())).collect();
            insts.push(json!({
                "instance": pid, "deployment": st.spec_id, "elements": elements, "public_vars": vars,
                "roles": roles, "started_at": st.started_at, "completed_at": st.completed_at,
            }));
        }
        Ok((Json::Array(deps), Json::Array(insts)))
    })?;
    fs::write(out.join("deployments.json"), serde_json::to_string_pretty(&deployments).expect("json"))?;
    fs::write(out.join("instances.json"), serde_json::to_string_pretty(&instances).expect("json"))?;
    Ok(json!({ "out": out, "blocks": blocks.len(), "total_gas": ws.engine.with_ledger(|l| l.total_gas()) }))
}

fn verify_chain(cli: &Cli, chain: Option<&Path>) -> Result<Json, Failure> {
    let path = chain.map(Path::to_path_buf).unwrap_or_else(|| cli.workspace.join("chain.ndjson"));
    let blocks = if path.exists() { read_chain(std::io::BufReader::new(fs::File::open(&path)?))? } else { Vec::new() };
    if !blocks.is_empty() && !verify_blocks(&blocks) {
        return Err(Failure::new("InvalidChain", format!("{} fails hash-link or signature checks", path.display())));
    }
    // Replaying through a recovered workspace also re-checks execution.
    let ws = Workspace::open(&cli.workspace, cli.seed)?;
    if chain.is_some() {
        let authorities = ws.config.configured_authorities()?.expect("workspace pins secrets");
        let replayed = confetty::engine::Engine::recover(ws.config.clone(), ws.engine.store().clone(), &blocks, authorities)?;
        return Ok(json!({
            "valid": true, "blocks": blocks.len(), "state_root": hex::encode(replayed.state_root()),
            "total_gas": replayed.with_ledger(|l| l.total_gas()),
        }));
    }
    Ok(json!({
        "valid": ws.engine.verify_chain(),
        "blocks": ws.engine.blocks().len(),
        "state_root": hex::encode(ws.engine.state_root()),
        "total_gas": ws.engine.with_ledger(|l| l.total_gas()),
    }))
}

fn run(cli: &Cli) -> Result<Option<Json>, Failure> {
    let open = || Workspace::open(&cli.workspace, cli.seed);
    // Mutating commands persist the chain even when the engine call fails,
    // since reverted transactions are sealed too.
    let mutate = |f: &dyn Fn(&Workspace) -> Result<Json, Failure>| -> Result<Option<Json>, Failure> {
        let ws = open()?;
        let r = f(&ws);
        ws.save()?;
        r.map(Some)
    };
    match &cli.command {
        Command::Configure { model, auditors, owner, policies } => {
            mutate(&|ws| configure(ws, model, auditors, owner, policies))
        }
        Command::Instantiate { deployment, bindings } => mutate(&|ws| instantiate(ws, *deployment, bindings)),
        Command::Transact { instance, message, actor, confidential, vars } => {
            mutate(&|ws| transact(ws, instance, message, actor, confidential.as_deref(), vars))
        }
        Command::Keygen { actor, out } => mutate(&|ws| keygen(ws, actor, out.as_deref())),
        Command::Inspect { instance, target, key, out } => inspect(&open()?, instance, target, key.as_deref(), out.as_deref()),
        Command::Export { out } => export(&open()?, out).map(Some),
        Command::VerifyChain { chain } => verify_chain(cli, chain.as_deref()).map(Some),
        Command::Bench { kind, out, repeats, payload_bytes } => {
            let opts = BenchOptions { seed: cli.seed, repeats: *repeats, payload_bytes: *payload_bytes, ..BenchOptions::default() };
            let out = out.clone().unwrap_or_else(|| cli.workspace.join("bench"));
            run_bench(kind, &opts, &out).map(Some)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Some(v)) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
            ExitCode::FAILURE
        }
    }
}
