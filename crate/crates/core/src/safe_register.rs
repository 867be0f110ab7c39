//! The wait-free, strongly safe register: every object stores exactly one
//! chunk, so storage is always `n * D / k`.

use std::sync::Arc;

use crate::base_object::{ObjectState, Rmw, RmwReply};
use crate::client::{broadcast, ChunkIndex, OpMachine, Outcome, Quorum, RegisterParams, Step};
use crate::codec::{Piece, Value};
use crate::types::{ClientId, TimeStamp};

/// Collects the chunks of the snapshots in a read quorum.
pub(crate) fn index_snapshots(replies: &[(usize, RmwReply)]) -> ChunkIndex {
    let mut idx = ChunkIndex::default();
    for (_, reply) in replies {
        if let RmwReply::Snapshot(state) = reply {
            for chunk in state.chunks() {
                idx.insert(chunk);
            }
        }
    }
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WritePhase {
    Start,
    ReadTs,
    Update,
}

/// `write(v)`: read a quorum, pick `<max num + 1, j>`, update every object,
/// wait for `n - f` acknowledgements.
pub struct SafeWrite {
    params: Arc<RegisterParams>,
    client: ClientId,
    pieces: Vec<Piece>,
    ts: Option<TimeStamp>,
    phase: WritePhase,
    quorum: Quorum,
}

impl SafeWrite {
    pub fn new(params: Arc<RegisterParams>, client: ClientId, value: &Value) -> Self {
        let pieces = params.encode(value);
        let quorum = Quorum::idle(params.quorum());
        Self {
            params,
            client,
            pieces,
            ts: None,
            phase: WritePhase::Start,
            quorum,
        }
    }
}

impl OpMachine for SafeWrite {
    fn on_reply(&mut self, round: u32, object: usize, reply: RmwReply) {
        self.quorum.offer(round, object, reply);
    }

    fn ready(&self) -> bool {
        self.phase == WritePhase::Start || self.quorum.complete()
    }

    fn advance(&mut self) -> Step {
        match self.phase {
            WritePhase::Start => {
                self.phase = WritePhase::ReadTs;
                self.quorum.start(1);
                Step::Trigger {
                    round: 1,
                    rmws: broadcast(self.params.n, |_| Rmw::Read),
                }
            }
            WritePhase::ReadTs => {
                let num = index_snapshots(self.quorum.replies()).max_num();
                let ts = TimeStamp::new(num + 1, self.client);
                self.ts = Some(ts);
                self.phase = WritePhase::Update;
                self.quorum.start(2);
                let pieces = &self.pieces;
                Step::Trigger {
                    round: 2,
                    rmws: broadcast(self.params.n, |i| Rmw::SafeUpdate {
                        piece: pieces[i - 1].clone(),
                        ts,
                    }),
                }
            }
            WritePhase::Update => Step::Return(Outcome::WriteOk {
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

/// `read()`: read a quorum; decode the largest timestamp with `k` distinct
/// pieces, or return `v0` if there is none.
pub struct SafeRead {
    params: Arc<RegisterParams>,
    started: bool,
    quorum: Quorum,
}

impl SafeRead {
    pub fn new(params: Arc<RegisterParams>) -> Self {
        let quorum = Quorum::idle(params.quorum());
        Self {
            params,
            started: false,
            quorum,
        }
    }
}

impl OpMachine for SafeRead {
    fn on_reply(&mut self, round: u32, object: usize, reply: RmwReply) {
        self.quorum.offer(round, object, reply);
    }

    fn ready(&self) -> bool {
        !self.started || self.quorum.complete()
    }

    fn advance(&mut self) -> Step {
        if !self.started {
            self.started = true;
            self.quorum.start(1);
            return Step::Trigger {
                round: 1,
                rmws: broadcast(self.params.n, |_| Rmw::Read),
            };
        }
        let idx = index_snapshots(self.quorum.replies());
        let outcome = match idx.max_decodable(self.params.k, TimeStamp::ZERO) {
            Some((ts, pieces)) => Outcome::ReadOk {
                value: self.params.decode(pieces),
                ts: Some(ts),
            },
            None => Outcome::ReadOk {
                value: self.params.v0.clone(),
                ts: None,
            },
        };
        Step::Return(outcome)
    }

    fn rounds(&self) -> u32 {
        self.quorum.round()
    }
}

/// Initial safe-protocol object states.
pub fn initial_objects(params: &RegisterParams) -> Vec<ObjectState> {
    params
        .v0_pieces
        .iter()
        .map(|p| ObjectState::Safe(crate::base_object::SafeObjectState::initial(p.clone())))
        .collect()
}
