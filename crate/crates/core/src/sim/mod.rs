//! Deterministic executor for register protocols over crash-prone base objects.
//!
//! A run is a sequence of actions chosen by a [`Scheduler`]. Each action is
//! either the delivery of one pending RMW, which applies its effect to the
//! object and hands the reply to the client in the same step, or one local
//! step of a client. Logical time is the action index: the first action is
//! step 1 and step 0 is the initial configuration.
//!
//! Crashes scheduled for step `s` happen just before action `s`. A crashed
//! object keeps its state, answers nothing and loses the RMWs pending on it.
//! A crashed client takes no further steps, but RMWs it already triggered
//! may still take effect.

pub mod config_file;
pub mod fuzz;
pub mod history_io;
pub mod scheduler;
pub mod sets;
pub mod strawman;
pub mod trace;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base_object::{apply, ObjectState, Rmw, RmwKind, RmwMismatch};
use crate::client::{
    auto_value, ClientProgram, OpMachine, Outcome, ParamError, RegisterParams, ScriptOp, Step,
};
use crate::regular_register::{RegularRead, RegularWrite};
use crate::safe_register::{SafeRead, SafeWrite};
use crate::types::{ClientId, History, OpKind, OperationRecord, RunEnd};

pub use scheduler::{
    Action, AdversaryAd, AfterScript, FairRandom, Fifo, PendingInfo, ReadyClient, SchedView,
    Scheduler, Scripted, ScriptedAction, StarveReaders,
};
pub use sets::{compute_sets, OutstandingWrite, Sets};
pub use trace::{StorageRow, StorageTrace, TraceMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Safe,
    Regular,
    Strawman,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Safe => "safe",
            Protocol::Regular => "regular",
            Protocol::Strawman => "strawman",
        })
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "safe" => Ok(Protocol::Safe),
            "regular" => Ok(Protocol::Regular),
            "strawman" => Ok(Protocol::Strawman),
            _ => Err(format!(
                "unknown protocol {s:?} (expected safe, regular or strawman)"
            )),
        }
    }
}

/// Delivery order on each client-to-object link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Links {
    /// RMWs of one client on one object take effect in trigger order.
    Fifo,
    /// Any pending RMW may be delivered.
    Unordered,
}

impl fmt::Display for Links {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Links::Fifo => "fifo",
            Links::Unordered => "unordered",
        })
    }
}

impl FromStr for Links {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fifo" => Ok(Links::Fifo),
            "unordered" => Ok(Links::Unordered),
            _ => Err(format!(
                "unknown link order {s:?} (expected fifo or unordered)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    FairRandom,
    AdversaryAd,
    Fifo,
    /// Delays readers behind complete writes; see [`StarveReaders`].
    StarveReaders,
    Scripted {
        steps: Vec<ScriptedAction>,
        after: AfterScript,
    },
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::FairRandom => "fair",
            Policy::AdversaryAd => "ad",
            Policy::Fifo => "fifo",
            Policy::StarveReaders => "starve-readers",
            Policy::Scripted { .. } => "scripted",
        }
    }

    pub fn scheduler(&self, seed: u64, window: u64) -> Box<dyn Scheduler> {
        match self {
            Policy::FairRandom => Box::new(FairRandom::new(seed, window)),
            Policy::AdversaryAd => Box::new(AdversaryAd::new()),
            Policy::Fifo => Box::new(Fifo),
            Policy::StarveReaders => Box::new(StarveReaders::new()),
            Policy::Scripted { steps, after } => Box::new(Scripted::new(steps.clone(), *after)),
        }
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fair" | "fair-random" => Ok(Policy::FairRandom),
            "ad" | "adversary-ad" => Ok(Policy::AdversaryAd),
            "fifo" => Ok(Policy::Fifo),
            "starve-readers" => Ok(Policy::StarveReaders),
            _ => Err(format!(
                "unknown policy {s:?} (expected fair, ad, fifo or starve-readers)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Component {
    Client(ClientId),
    /// 1-based object index.
    Object(usize),
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Component::Client(c) => write!(f, "c{}", c.0),
            Component::Object(o) => write!(f, "o{o}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrashSpec {
    pub component: Component,
    pub step: u64,
}

impl fmt::Display for CrashSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.component, self.step)
    }
}

impl FromStr for CrashSpec {
    type Err = String;

    /// `o<index>:<step>` or `c<id>:<step>`; a bare `<index>:<step>` names an object.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (who, step) = s
            .split_once(':')
            .ok_or_else(|| format!("crash {s:?} is not <component>:<step>"))?;
        let step = step
            .trim()
            .parse()
            .map_err(|_| format!("bad crash step in {s:?}"))?;
        let who = who.trim();
        let num = |t: &str| {
            t.parse::<u64>()
                .map_err(|_| format!("bad component in {s:?}"))
        };
        let component = if let Some(c) = who.strip_prefix('c') {
            Component::Client(ClientId(num(c)? as u32))
        } else {
            Component::Object(num(who.strip_prefix('o').unwrap_or(who))? as usize)
        };
        Ok(CrashSpec { component, step })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub protocol: Protocol,
    pub n: usize,
    pub f: usize,
    pub k: usize,
    /// Value size D in bits; a positive multiple of 8.
    pub d_bits: u64,
    pub seed: u64,
    pub policy: Policy,
    pub clients: Vec<ClientProgram>,
    pub crashes: Vec<CrashSpec>,
    pub step_limit: u64,
    pub links: Links,
    /// Round budget of regular reads; `None` means unbounded.
    pub max_read_rounds: Option<u32>,
    /// Ages after which the fair scheduler forces the oldest action.
    pub fairness_window: u64,
}

pub const DEFAULT_STEP_LIMIT: u64 = 100_000;
pub const DEFAULT_FAIRNESS_WINDOW: u64 = 64;

impl Config {
    pub fn new(protocol: Protocol, n: usize, f: usize, k: usize) -> Self {
        Self {
            protocol,
            n,
            f,
            k,
            d_bits: 1024,
            seed: 0,
            policy: Policy::FairRandom,
            clients: Vec::new(),
            crashes: Vec::new(),
            step_limit: DEFAULT_STEP_LIMIT,
            links: Links::Fifo,
            max_read_rounds: None,
            fairness_window: DEFAULT_FAIRNESS_WINDOW,
        }
    }

    /// Checks parameter relations, client ids and the crash plan.
    pub fn validate(&self) -> Result<RegisterParams, SimError> {
        let params = RegisterParams::new(self.n, self.f, self.k, self.d_bits)?;
        let mut ids = BTreeSet::new();
        for c in &self.clients {
            if c.id == ClientId::INITIAL {
                return Err(SimError::ReservedClient);
            }
            if !ids.insert(c.id) {
                return Err(SimError::DuplicateClient(c.id));
            }
            for op in &c.script {
                if let ScriptOp::WriteValue(v) = op {
                    if v.bit_length() != self.d_bits {
                        return Err(SimError::ValueSize {
                            client: c.id,
                            bits: v.bit_length(),
                            d_bits: self.d_bits,
                        });
                    }
                }
            }
        }
        let mut crashed_objects = BTreeSet::new();
        for crash in &self.crashes {
            match crash.component {
                Component::Object(o) if o == 0 || o > self.n => {
                    return Err(SimError::UnknownObject(o))
                }
                Component::Object(o) => {
                    crashed_objects.insert(o);
                }
                Component::Client(c) if !ids.contains(&c) => {
                    return Err(SimError::UnknownClient(c))
                }
                Component::Client(_) => {}
            }
        }
        if crashed_objects.len() > self.f {
            return Err(SimError::TooManyObjectCrashes {
                crashes: crashed_objects.len(),
                f: self.f,
            });
        }
        Ok(params)
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("crash plan kills {crashes} objects but only f = {f} may fail")]
    TooManyObjectCrashes { crashes: usize, f: usize },
    #[error("object {0} does not exist")]
    UnknownObject(usize),
    #[error("client {0} is not part of the run")]
    UnknownClient(ClientId),
    #[error("client id {0} appears twice")]
    DuplicateClient(ClientId),
    #[error("client {client} writes a {bits}-bit value but D = {d_bits}")]
    ValueSize {
        client: ClientId,
        bits: u64,
        d_bits: u64,
    },
    #[error("client id 0 is reserved for the initial write")]
    ReservedClient,
    #[error("scripted action {action:?} is not enabled at step {step}")]
    ScriptedActionNotEnabled { step: u64, action: ScriptedAction },
    #[error("scheduler chose {0:?}, which is not enabled")]
    NotEnabled(Action),
    #[error(transparent)]
    Rmw(#[from] RmwMismatch),
}

/// What an observer sees after each step.
pub struct StepRecord<'a> {
    pub step: u64,
    pub action: Action,
    /// The client that acted, or whose RMW was delivered.
    pub actor: ClientId,
    /// For deliveries: the object and RMW kind.
    pub delivered: Option<(usize, RmwKind)>,
    pub sets_before: &'a Sets,
    pub sets_after: &'a Sets,
    pub objects: &'a [ObjectState],
    pub crashed_objects: &'a [bool],
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub history: History,
    pub trace: StorageTrace,
}

struct Pending {
    client: ClientId,
    object: usize,
    round: u32,
    record: usize,
    rmw: Rmw,
    triggered_at: u64,
    op: OpKind,
}

struct Current {
    record: usize,
    kind: OpKind,
    machine: Box<dyn OpMachine>,
}

struct ClientSlot {
    program: ClientProgram,
    next: usize,
    ops_invoked: u64,
    current: Option<Current>,
    crashed: bool,
    /// Stopped for good after a read gave up.
    halted: bool,
    ready: bool,
    ready_since: u64,
}

impl ClientSlot {
    fn next_op(&self) -> Option<&ScriptOp> {
        let len = self.program.script.len();
        if len == 0 || (!self.program.repeat && self.next >= len) {
            return None;
        }
        Some(&self.program.script[self.next % len])
    }

    /// Has an operation in progress or left to invoke.
    fn has_work(&self) -> bool {
        !self.crashed && !self.halted && (self.current.is_some() || self.next_op().is_some())
    }

    fn can_act(&self) -> bool {
        if self.crashed || self.halted {
            return false;
        }
        match &self.current {
            Some(cur) => cur.machine.ready(),
            None => self.next_op().is_some(),
        }
    }
}

struct Simulator<'c> {
    config: &'c Config,
    params: Arc<RegisterParams>,
    objects: Vec<ObjectState>,
    crashed_objects: Vec<bool>,
    clients: Vec<ClientSlot>,
    pending: BTreeMap<u64, Pending>,
    next_rmw: u64,
    ops: Vec<OperationRecord>,
    step: u64,
    sets: Sets,
    rows: Vec<StorageRow>,
    writes_returned: u64,
}

impl<'c> Simulator<'c> {
    fn new(config: &'c Config) -> Result<Self, SimError> {
        let params = Arc::new(config.validate()?);
        let objects = match config.protocol {
            Protocol::Safe => crate::safe_register::initial_objects(&params),
            Protocol::Regular => crate::regular_register::initial_objects(&params),
            Protocol::Strawman => strawman::initial_objects(&params),
        };
        let mut clients: Vec<ClientSlot> = config
            .clients
            .iter()
            .map(|p| ClientSlot {
                program: p.clone(),
                next: 0,
                ops_invoked: 0,
                current: None,
                crashed: false,
                halted: false,
                ready: false,
                ready_since: 0,
            })
            .collect();
        clients.sort_by_key(|c| c.program.id);
        for c in clients.iter_mut() {
            c.ready = c.can_act();
        }
        let mut sim = Self {
            config,
            params,
            crashed_objects: vec![false; objects.len()],
            objects,
            clients,
            pending: BTreeMap::new(),
            next_rmw: 0,
            ops: Vec::new(),
            step: 0,
            sets: Sets::default(),
            rows: Vec::new(),
            writes_returned: 0,
        };
        sim.sets = sim.compute_sets();
        sim.push_row();
        Ok(sim)
    }

    fn compute_sets(&self) -> Sets {
        let outstanding: Vec<OutstandingWrite> = self
            .clients
            .iter()
            .filter_map(|c| {
                c.current
                    .as_ref()
                    .filter(|cur| cur.kind == OpKind::Write)
                    .map(|cur| (c, cur))
            })
            .map(|(c, cur)| OutstandingWrite {
                client: c.program.id,
                ts: cur.machine.write_ts(),
            })
            .collect();
        compute_sets(&outstanding, &self.objects, self.params.k)
    }

    fn push_row(&mut self) {
        self.rows.push(StorageRow {
            step: self.step,
            chunks: self
                .objects
                .iter()
                .map(|o| o.chunk_count() as u32)
                .collect(),
            c: self.sets.c.len() as u32,
            c_plus: self.sets.c_plus.len() as u32,
            c_minus: self.sets.c_minus.len() as u32,
            f_members: self.sets.f.iter().copied().collect(),
            attributed_chunks: self.sets.attributed_chunks,
            writes_returned: self.writes_returned,
        });
    }

    fn apply_crashes(&mut self, step: u64) {
        for crash in &self.config.crashes {
            if crash.step > step {
                continue;
            }
            match crash.component {
                Component::Object(o) if !self.crashed_objects[o - 1] => {
                    self.crashed_objects[o - 1] = true;
                    self.pending.retain(|_, p| p.object != o);
                }
                Component::Client(c) => {
                    if let Some(slot) = self.clients.iter_mut().find(|s| s.program.id == c) {
                        slot.crashed = true;
                        slot.ready = false;
                    }
                }
                Component::Object(_) => {}
            }
        }
    }

    fn deliverable(&self) -> Vec<PendingInfo> {
        let mut heads = BTreeSet::new();
        let mut out = Vec::new();
        for (&id, p) in &self.pending {
            if self.config.links == Links::Fifo && !heads.insert((p.client, p.object)) {
                continue;
            }
            out.push(PendingInfo {
                id,
                client: p.client,
                object: p.object,
                triggered_at: p.triggered_at,
                kind: p.rmw.kind(),
                op: p.op,
            });
        }
        out
    }

    fn ready_clients(&self) -> Vec<ReadyClient> {
        self.clients
            .iter()
            .filter(|c| c.ready)
            .map(|c| {
                let (op, invokes) = match &c.current {
                    Some(cur) => (cur.kind, false),
                    None => (op_kind(c.next_op().expect("ready client has an op")), true),
                };
                ReadyClient {
                    client: c.program.id,
                    since: c.ready_since,
                    op,
                    invokes,
                }
            })
            .collect()
    }

    fn idle_end(&self) -> RunEnd {
        if self.pending.is_empty() && !self.clients.iter().any(ClientSlot::has_work) {
            RunEnd::Quiescent
        } else {
            RunEnd::Stalled
        }
    }

    fn start_op(&mut self, idx: usize) {
        let step = self.step;
        let params = self.params.clone();
        let max_rounds = self.config.max_read_rounds;
        let protocol = self.config.protocol;
        let record = self.ops.len();
        let slot = &mut self.clients[idx];
        let op = slot.next_op().expect("client with work").clone();
        slot.next += 1;
        slot.ops_invoked += 1;
        let id = slot.program.id;
        let (kind, value, machine): (OpKind, Option<_>, Box<dyn OpMachine>) = match op {
            ScriptOp::Read => {
                let m: Box<dyn OpMachine> = match protocol {
                    Protocol::Safe => Box::new(SafeRead::new(params)),
                    Protocol::Regular => Box::new(RegularRead::new(params, max_rounds)),
                    Protocol::Strawman => Box::new(strawman::StrawmanRead::new(params)),
                };
                (OpKind::Read, None, m)
            }
            ScriptOp::Write | ScriptOp::WriteValue(_) => {
                let v = match op {
                    ScriptOp::WriteValue(v) => v,
                    _ => auto_value(id, slot.ops_invoked, params.d_bits),
                };
                let m: Box<dyn OpMachine> = match protocol {
                    Protocol::Safe => Box::new(SafeWrite::new(params, id, &v)),
                    Protocol::Regular => Box::new(RegularWrite::new(params, id, &v)),
                    Protocol::Strawman => Box::new(strawman::StrawmanWrite::new(params, id, &v)),
                };
                (OpKind::Write, Some(v), m)
            }
        };
        slot.current = Some(Current {
            record,
            kind,
            machine,
        });
        self.ops.push(OperationRecord {
            id: record,
            client: id,
            kind,
            value,
            invoke_time: step,
            return_time: None,
            ts: None,
            rounds: 0,
            gave_up: None,
        });
    }

    fn client_step(&mut self, idx: usize) {
        if self.clients[idx].current.is_none() {
            self.start_op(idx);
        }
        let step = self.step;
        let slot = &mut self.clients[idx];
        let client = slot.program.id;
        let cur = slot.current.as_mut().expect("operation in progress");
        let result = cur.machine.advance();
        let rec = &mut self.ops[cur.record];
        rec.rounds = cur.machine.rounds();
        if cur.kind == OpKind::Write {
            rec.ts = cur.machine.write_ts();
        }
        match result {
            Step::Trigger { round, rmws } => {
                let (record, op) = (cur.record, cur.kind);
                for (object, rmw) in rmws {
                    if self.crashed_objects[object - 1] {
                        continue;
                    }
                    self.pending.insert(
                        self.next_rmw,
                        Pending {
                            client,
                            object,
                            round,
                            record,
                            rmw,
                            triggered_at: step,
                            op,
                        },
                    );
                    self.next_rmw += 1;
                }
            }
            Step::Return(outcome) => {
                match outcome {
                    Outcome::WriteOk { ts } => {
                        rec.ts = Some(ts);
                        rec.return_time = Some(step);
                        self.writes_returned += 1;
                    }
                    Outcome::ReadOk { value, ts } => {
                        rec.value = Some(value);
                        rec.ts = ts;
                        rec.return_time = Some(step);
                    }
                    Outcome::GaveUp => {
                        rec.gave_up = Some(step);
                        slot.halted = true;
                    }
                }
                slot.current = None;
            }
        }
    }

    fn deliver(&mut self, id: u64) -> Result<(ClientId, usize, RmwKind), SimError> {
        let p = self
            .pending
            .remove(&id)
            .ok_or(SimError::NotEnabled(Action::Deliver(id)))?;
        let reply = apply(
            &mut self.objects[p.object - 1],
            p.object,
            self.params.k,
            &p.rmw,
        )?;
        if let Some(slot) = self.clients.iter_mut().find(|s| s.program.id == p.client) {
            if let Some(cur) = slot
                .current
                .as_mut()
                .filter(|c| c.record == p.record && !slot.crashed)
            {
                cur.machine.on_reply(p.round, p.object, reply);
            }
        }
        Ok((p.client, p.object, p.rmw.kind()))
    }

    fn refresh_ready(&mut self) {
        let step = self.step;
        for c in self.clients.iter_mut() {
            let now = c.can_act();
            if now && !c.ready {
                c.ready_since = step;
            }
            c.ready = now;
        }
    }

    fn run(
        mut self,
        scheduler: &mut dyn Scheduler,
        mut observer: Option<&mut dyn FnMut(&StepRecord<'_>)>,
    ) -> Result<RunOutput, SimError> {
        let limit = self.config.step_limit;
        let end = loop {
            let step = self.step + 1;
            if step <= limit {
                self.apply_crashes(step);
            }
            let deliverable = self.deliverable();
            let ready = self.ready_clients();
            if deliverable.is_empty() && ready.is_empty() {
                break self.idle_end();
            }
            if step > limit {
                break RunEnd::Truncated;
            }
            let view = SchedView {
                step,
                deliverable: &deliverable,
                ready: &ready,
                sets: &self.sets,
                writes_returned: self.writes_returned,
            };
            let Some(action) = scheduler.choose(&view)? else {
                break self.idle_end();
            };
            self.step = step;
            let (actor, delivered) = match action {
                Action::Deliver(id) => {
                    if !deliverable.iter().any(|p| p.id == id) {
                        return Err(SimError::NotEnabled(action));
                    }
                    let (client, object, kind) = self.deliver(id)?;
                    (client, Some((object, kind)))
                }
                Action::Client(c) => {
                    let idx = self
                        .clients
                        .iter()
                        .position(|s| s.program.id == c && s.ready)
                        .ok_or(SimError::NotEnabled(action))?;
                    self.client_step(idx);
                    (c, None)
                }
            };
            self.refresh_ready();
            let before = std::mem::take(&mut self.sets);
            self.sets = self.compute_sets();
            self.push_row();
            if let Some(obs) = observer.as_mut() {
                obs(&StepRecord {
                    step,
                    action,
                    actor,
                    delivered,
                    sets_before: &before,
                    sets_after: &self.sets,
                    objects: &self.objects,
                    crashed_objects: &self.crashed_objects,
                });
            }
        };
        Ok(self.finish(end))
    }

    fn finish(self, end: RunEnd) -> RunOutput {
        let mut notes = Vec::new();
        for crash in &self.config.crashes {
            if crash.step > self.step {
                notes.push(format!(
                    "crash {crash} is past the last step {} and did not happen",
                    self.step
                ));
            }
        }
        let crashed_objects: Vec<usize> = self
            .crashed_objects
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(i, _)| i + 1)
            .collect();
        let crashed_clients: BTreeSet<ClientId> = self
            .clients
            .iter()
            .filter(|c| c.crashed)
            .map(|c| c.program.id)
            .collect();
        let outstanding_writes = self
            .ops
            .iter()
            .filter(|o| o.is_write() && !o.returned())
            .count();
        let meta = TraceMeta {
            protocol: self.config.protocol,
            n: self.config.n,
            f: self.config.f,
            k: self.config.k,
            d_bits: self.config.d_bits,
            end,
            crashed_objects,
            outstanding_writes,
            notes,
        };
        let history = History {
            initial: self.params.v0.clone(),
            ops: self.ops,
            steps: self.step,
            end,
            crashed_clients,
        };
        RunOutput {
            history,
            trace: StorageTrace {
                meta,
                rows: self.rows,
            },
        }
    }
}

fn op_kind(op: &ScriptOp) -> OpKind {
    match op {
        ScriptOp::Read => OpKind::Read,
        ScriptOp::Write | ScriptOp::WriteValue(_) => OpKind::Write,
    }
}

/// Runs `config` under its own policy.
pub fn run(config: &Config) -> Result<RunOutput, SimError> {
    let mut scheduler = config.policy.scheduler(config.seed, config.fairness_window);
    Simulator::new(config)?.run(scheduler.as_mut(), None)
}

/// Runs `config` and calls `observer` after every step.
pub fn run_observed(
    config: &Config,
    observer: &mut dyn FnMut(&StepRecord<'_>),
) -> Result<RunOutput, SimError> {
    let mut scheduler = config.policy.scheduler(config.seed, config.fairness_window);
    Simulator::new(config)?.run(scheduler.as_mut(), Some(observer))
}

/// Runs `config` under a caller-supplied scheduler, ignoring `config.policy`.
pub fn run_with_scheduler(
    config: &Config,
    scheduler: &mut dyn Scheduler,
    observer: Option<&mut dyn FnMut(&StepRecord<'_>)>,
) -> Result<RunOutput, SimError> {
    Simulator::new(config)?.run(scheduler, observer)
}
