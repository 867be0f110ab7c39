//! Scheduling policies: which enabled action runs next.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sets::Sets;
use super::SimError;
use crate::base_object::RmwKind;
use crate::types::{ClientId, OpKind};

/// One simulator action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    /// Apply the pending RMW with this id to its object and deliver the reply.
    Deliver(u64),
    /// Let the client take its next local step: invoke an operation and
    /// trigger its first round, trigger the next round, or return.
    Client(ClientId),
}

/// A triggered RMW whose response has not happened yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PendingInfo {
    pub id: u64,
    pub client: ClientId,
    /// 1-based object index.
    pub object: usize,
    pub triggered_at: u64,
    pub kind: RmwKind,
    pub op: OpKind,
}

/// A client able to take a local step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadyClient {
    pub client: ClientId,
    /// Step since which the client has been able to act.
    pub since: u64,
    /// Kind of the operation the step belongs to.
    pub op: OpKind,
    /// Whether the step invokes a new operation.
    pub invokes: bool,
}

/// What a scheduler may look at.
#[derive(Debug)]
pub struct SchedView<'a> {
    /// Index of the step being chosen (the first action is step 1).
    pub step: u64,
    /// Deliverable RMWs in trigger order.
    pub deliverable: &'a [PendingInfo],
    /// Clients able to act, by id.
    pub ready: &'a [ReadyClient],
    /// The sets at the end of the previous step.
    pub sets: &'a Sets,
    pub writes_returned: u64,
}

impl SchedView<'_> {
    pub fn is_empty(&self) -> bool {
        self.deliverable.is_empty() && self.ready.is_empty()
    }
}

pub trait Scheduler {
    /// Picks the next action, or `None` to stop the run.
    fn choose(&mut self, view: &SchedView<'_>) -> Result<Option<Action>, SimError>;
}

/// The oldest enabled action: smallest enabled-since step, deliveries before
/// client steps, then by id.
fn oldest(view: &SchedView<'_>) -> Option<Action> {
    let d = view
        .deliverable
        .iter()
        .map(|p| (p.triggered_at, 0u8, p.id, Action::Deliver(p.id)));
    let c = view.ready.iter().map(|r| {
        (
            r.since,
            1u8,
            u64::from(r.client.0),
            Action::Client(r.client),
        )
    });
    d.chain(c)
        .min_by_key(|&(since, class, id, _)| (since, class, id))
        .map(|t| t.3)
}

/// Uniform random choice among enabled actions, except that once any action
/// has waited `window` steps the oldest one runs. Every enabled action is
/// therefore taken within a bounded number of steps.
pub struct FairRandom {
    rng: ChaCha8Rng,
    window: u64,
}

impl FairRandom {
    pub fn new(seed: u64, window: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            window: window.max(1),
        }
    }
}

impl Scheduler for FairRandom {
    fn choose(&mut self, view: &SchedView<'_>) -> Result<Option<Action>, SimError> {
        if view.is_empty() {
            return Ok(None);
        }
        let overdue = view
            .deliverable
            .iter()
            .any(|p| view.step - p.triggered_at >= self.window)
            || view
                .ready
                .iter()
                .any(|r| view.step - r.since >= self.window);
        if overdue {
            return Ok(oldest(view));
        }
        let total = view.deliverable.len() + view.ready.len();
        let pick = self.rng.gen_range(0..total);
        Ok(Some(if pick < view.deliverable.len() {
            Action::Deliver(view.deliverable[pick].id)
        } else {
            Action::Client(view.ready[pick - view.deliverable.len()].client)
        }))
    }
}

/// Runs the oldest enabled action.
#[derive(Debug, Default)]
pub struct Fifo;

impl Scheduler for Fifo {
    fn choose(&mut self, view: &SchedView<'_>) -> Result<Option<Action>, SimError> {
        Ok(oldest(view))
    }
}

/// The adversary that starves writers whose data is already stored.
///
/// Rule 1: if a client in C⁻ has a pending RMW on an object outside F, deliver
/// the longest pending such RMW (ties by object index, then client id).
/// Rule 2: otherwise pick, round robin, a client that wants to act and let it
/// trigger; its RMWs take effect only when rule 1 later delivers them.
#[derive(Debug, Default)]
pub struct AdversaryAd {
    /// The last client rule 2 picked.
    last: Option<ClientId>,
}

impl AdversaryAd {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rule 1 in isolation: the RMW it would deliver.
    pub fn rule_one(view: &SchedView<'_>) -> Option<u64> {
        view.deliverable
            .iter()
            .filter(|p| view.sets.c_minus.contains(&p.client) && !view.sets.f.contains(&p.object))
            .min_by_key(|p| (p.triggered_at, p.object, p.client))
            .map(|p| p.id)
    }
}

impl Scheduler for AdversaryAd {
    fn choose(&mut self, view: &SchedView<'_>) -> Result<Option<Action>, SimError> {
        if let Some(id) = Self::rule_one(view) {
            return Ok(Some(Action::Deliver(id)));
        }
        let next = match self.last {
            Some(last) => view
                .ready
                .iter()
                .find(|r| r.client > last)
                .or_else(|| view.ready.first()),
            None => view.ready.first(),
        };
        Ok(next.map(|r| {
            self.last = Some(r.client);
            Action::Client(r.client)
        }))
    }
}

/// A step of a hand-written schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScriptedAction {
    Client(ClientId),
    /// Deliver the oldest pending RMW of `client` on `object`.
    Deliver {
        client: ClientId,
        object: usize,
    },
}

/// What happens after the scripted steps are used up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AfterScript {
    Stop,
    Fifo,
}

/// Replays a fixed list of actions; each must be enabled when its turn comes.
#[derive(Debug, Clone)]
pub struct Scripted {
    steps: Vec<ScriptedAction>,
    pos: usize,
    after: AfterScript,
}

impl Scripted {
    pub fn new(steps: Vec<ScriptedAction>, after: AfterScript) -> Self {
        Self {
            steps,
            pos: 0,
            after,
        }
    }
}

impl Scheduler for Scripted {
    fn choose(&mut self, view: &SchedView<'_>) -> Result<Option<Action>, SimError> {
        let Some(&next) = self.steps.get(self.pos) else {
            return match self.after {
                AfterScript::Stop => Ok(None),
                AfterScript::Fifo => Ok(oldest(view)),
            };
        };
        self.pos += 1;
        let action = match next {
            ScriptedAction::Client(c) => view
                .ready
                .iter()
                .find(|r| r.client == c)
                .map(|r| Action::Client(r.client)),
            ScriptedAction::Deliver { client, object } => view
                .deliverable
                .iter()
                .find(|p| p.client == client && p.object == object)
                .map(|p| Action::Deliver(p.id)),
        };
        action.map(Some).ok_or(SimError::ScriptedActionNotEnabled {
            step: view.step,
            action: next,
        })
    }
}

/// Delays readers so that every read round overlaps complete writes.
///
/// After each read RMW is delivered, writers run alone until one more write
/// returns, never touching the object the reader read last. The reader then
/// gets one more RMW. With a write stream that never ends, each read round
/// sees pieces of a different write on every object and has to retry. Once
/// writers have nothing left to do, everything runs oldest first.
#[derive(Debug, Default)]
pub struct StarveReaders {
    writes_seen: u64,
    reader_turn: bool,
    last_read_object: Option<usize>,
}

impl StarveReaders {
    pub fn new() -> Self {
        Self {
            writes_seen: 0,
            reader_turn: true,
            last_read_object: None,
        }
    }
}

impl Scheduler for StarveReaders {
    fn choose(&mut self, view: &SchedView<'_>) -> Result<Option<Action>, SimError> {
        if view.writes_returned > self.writes_seen {
            self.writes_seen = view.writes_returned;
            self.reader_turn = true;
        }
        let reader_steps = view
            .ready
            .iter()
            .find(|r| r.op == OpKind::Read)
            .map(|r| Action::Client(r.client));
        if let Some(a) = reader_steps {
            return Ok(Some(a));
        }
        if self.reader_turn {
            if let Some(p) = view.deliverable.iter().find(|p| p.op == OpKind::Read) {
                self.reader_turn = false;
                self.last_read_object = Some(p.object);
                return Ok(Some(Action::Deliver(p.id)));
            }
        }
        let blocked: BTreeSet<usize> = self.last_read_object.into_iter().collect();
        let writer_delivery = view
            .deliverable
            .iter()
            .find(|p| p.op == OpKind::Write && !blocked.contains(&p.object))
            .map(|p| Action::Deliver(p.id));
        let writer_step = view
            .ready
            .iter()
            .find(|r| r.op == OpKind::Write)
            .map(|r| Action::Client(r.client));
        if let Some(a) = writer_delivery.or(writer_step) {
            return Ok(Some(a));
        }
        Ok(oldest(view))
    }
}
