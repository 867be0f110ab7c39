//! The strongly regular, FW-terminating register with adaptive storage.
//!
//! Objects keep up to `k` pieces of different writes in `V_p` and fall back
//! to a full replica in `V_f` once `V_p` is full. Writes take three rounds
//! (read timestamps, update, garbage collect); reads retry until they see a
//! decodable timestamp no older than the largest `storedTS` they read.

use std::sync::Arc;

use crate::base_object::{ObjectState, RegularObjectState, Rmw, RmwReply};
use crate::client::{broadcast, ChunkIndex, OpMachine, Outcome, Quorum, RegisterParams, Step};
use crate::codec::{Piece, Value};
use crate::types::{ClientId, TimeStamp};

/// `readValue`: the largest `storedTS` in the quorum and all chunks of
/// `V_p` and `V_f` it returned.
pub fn read_value(replies: &[(usize, RmwReply)]) -> (TimeStamp, ChunkIndex) {
    let mut stored = TimeStamp::ZERO;
    let mut idx = ChunkIndex::default();
    for (_, reply) in replies {
        if let RmwReply::Snapshot(state) = reply {
            stored = stored.max(state.gate_ts());
            for chunk in state.chunks() {
                idx.insert(chunk);
            }
        }
    }
    (stored, idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WritePhase {
    Start,
    ReadTs,
    Update,
    Gc,
}

pub struct RegularWrite {
    params: Arc<RegisterParams>,
    client: ClientId,
    write_set: Arc<[Piece]>,
    ts: Option<TimeStamp>,
    phase: WritePhase,
    quorum: Quorum,
}

impl RegularWrite {
    pub fn new(params: Arc<RegisterParams>, client: ClientId, value: &Value) -> Self {
        let write_set = params.encode(value).into();
        let quorum = Quorum::idle(params.quorum());
        Self {
            params,
            client,
            write_set,
            ts: None,
            phase: WritePhase::Start,
            quorum,
        }
    }
}

impl OpMachine for RegularWrite {
    fn on_reply(&mut self, round: u32, object: usize, reply: RmwReply) {
        self.quorum.offer(round, object, reply);
    }

    fn ready(&self) -> bool {
        self.phase == WritePhase::Start || self.quorum.complete()
    }

    fn advance(&mut self) -> Step {
        let n = self.params.n;
        match self.phase {
            WritePhase::Start => {
                self.phase = WritePhase::ReadTs;
                self.quorum.start(1);
                Step::Trigger {
                    round: 1,
                    rmws: broadcast(n, |_| Rmw::Read),
                }
            }
            WritePhase::ReadTs => {
                let (stored_ts, read_set) = read_value(self.quorum.replies());
                let num = stored_ts.num.max(read_set.max_num());
                let ts = TimeStamp::new(num + 1, self.client);
                self.ts = Some(ts);
                self.phase = WritePhase::Update;
                self.quorum.start(2);
                let write_set = &self.write_set;
                Step::Trigger {
                    round: 2,
                    rmws: broadcast(n, |_| Rmw::RegularUpdate {
                        write_set: write_set.clone(),
                        ts,
                        stored_ts,
                    }),
                }
            }
            WritePhase::Update => {
                let ts = self.ts.expect("ts picked in round 1");
                self.phase = WritePhase::Gc;
                self.quorum.start(3);
                let write_set = &self.write_set;
                Step::Trigger {
                    round: 3,
                    rmws: broadcast(n, |_| Rmw::Gc {
                        write_set: write_set.clone(),
                        ts,
                    }),
                }
            }
            WritePhase::Gc => Step::Return(Outcome::WriteOk {
                ts: self.ts.expect("ts picked in round 1"),
            }),
        }
    }

    fn write_ts(&self) -> Option<TimeStamp> {
        self.ts
    }

    fn rounds(&self) -> u32 {
        self.quorum.round()
    }
}

pub struct RegularRead {
    params: Arc<RegisterParams>,
    /// Give up after this many `readValue` rounds; `None` retries forever.
    max_rounds: Option<u32>,
    started: bool,
    quorum: Quorum,
}

impl RegularRead {
    pub fn new(params: Arc<RegisterParams>, max_rounds: Option<u32>) -> Self {
        let quorum = Quorum::idle(params.quorum());
        Self {
            params,
            max_rounds,
            started: false,
            quorum,
        }
    }

    fn next_round(&mut self) -> Step {
        let round = self.quorum.round() + 1;
        self.quorum.start(round);
        Step::Trigger {
            round,
            rmws: broadcast(self.params.n, |_| Rmw::Read),
        }
    }
}

impl OpMachine for RegularRead {
    fn on_reply(&mut self, round: u32, object: usize, reply: RmwReply) {
        self.quorum.offer(round, object, reply);
    }

    fn ready(&self) -> bool {
        !self.started || self.quorum.complete()
    }

    fn advance(&mut self) -> Step {
        if !self.started {
            self.started = true;
            return self.next_round();
        }
        let (stored_ts, read_set) = read_value(self.quorum.replies());
        if let Some((ts, pieces)) = read_set.max_decodable(self.params.k, stored_ts) {
            return Step::Return(Outcome::ReadOk {
                value: self.params.decode(pieces),
                ts: Some(ts),
            });
        }
        if self.max_rounds.is_some_and(|m| self.quorum.round() >= m) {
            return Step::Return(Outcome::GaveUp);
        }
        self.next_round()
    }

    fn rounds(&self) -> u32 {
        self.quorum.round()
    }
}

pub fn initial_objects(params: &RegisterParams) -> Vec<ObjectState> {
    params
        .v0_pieces
        .iter()
        .map(|p| ObjectState::Regular(RegularObjectState::initial(p.clone())))
        .collect()
}

/// A quorum-sized set of objects from which no read could return.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvailabilityViolation {
    /// 1-based object indices.
    pub objects: Vec<usize>,
    pub max_stored_ts: TimeStamp,
}

/// Checks that every set `S` of `n - f` objects holds `k` distinct pieces of
/// some timestamp no older than the largest `storedTS` in `S`. Crashed
/// objects count with the state they had when they crashed.
pub fn check_availability(
    objects: &[ObjectState],
    f: usize,
    k: usize,
) -> Result<(), AvailabilityViolation> {
    let n = objects.len();
    let size = n - f;
    let mut subset: Vec<usize> = (0..size).collect();
    loop {
        let mut stored = TimeStamp::ZERO;
        let mut idx = ChunkIndex::default();
        for &i in &subset {
            stored = stored.max(objects[i].gate_ts());
            for chunk in objects[i].chunks() {
                idx.insert(chunk);
            }
        }
        if idx.max_decodable(k, stored).is_none() {
            return Err(AvailabilityViolation {
                objects: subset.iter().map(|i| i + 1).collect(),
                max_stored_ts: stored,
            });
        }
        // Next combination in lexicographic order.
        let Some(pos) = (0..size).rev().find(|&p| subset[p] < n - size + p) else {
            return Ok(());
        };
        subset[pos] += 1;
        for q in pos + 1..size {
            subset[q] = subset[q - 1] + 1;
        }
    }
}
