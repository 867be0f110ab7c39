//! The append-only strawman: the safe protocol changed so that no piece is
//! ever overwritten. Every write leaves one piece per object it reaches, so
//! storage grows with the number of writes that ever touched the objects.

use std::sync::Arc;

use crate::base_object::{ObjectState, Rmw, RmwReply, StrawmanObjectState};
use crate::client::{broadcast, OpMachine, Outcome, Quorum, RegisterParams, Step};
use crate::codec::{Piece, Value};
use crate::safe_register::index_snapshots;
use crate::types::{ClientId, TimeStamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Start,
    ReadTs,
    Append,
}

pub struct StrawmanWrite {
    params: Arc<RegisterParams>,
    client: ClientId,
    pieces: Vec<Piece>,
    ts: Option<TimeStamp>,
    phase: Phase,
    quorum: Quorum,
}

impl StrawmanWrite {
    pub fn new(params: Arc<RegisterParams>, client: ClientId, value: &Value) -> Self {
        let pieces = params.encode(value);
        let quorum = Quorum::idle(params.quorum());
        Self {
            params,
            client,
            pieces,
            ts: None,
            phase: Phase::Start,
            quorum,
        }
    }
}

impl OpMachine for StrawmanWrite {
    fn on_reply(&mut self, round: u32, object: usize, reply: RmwReply) {
        self.quorum.offer(round, object, reply);
    }

    fn ready(&self) -> bool {
        self.phase == Phase::Start || self.quorum.complete()
    }

    fn advance(&mut self) -> Step {
        match self.phase {
            Phase::Start => {
                self.phase = Phase::ReadTs;
                self.quorum.start(1);
                Step::Trigger {
                    round: 1,
                    rmws: broadcast(self.params.n, |_| Rmw::Read),
                }
            }
            Phase::ReadTs => {
                let num = index_snapshots(self.quorum.replies()).max_num();
                let ts = TimeStamp::new(num + 1, self.client);
                self.ts = Some(ts);
                self.phase = Phase::Append;
                self.quorum.start(2);
                let pieces = &self.pieces;
                Step::Trigger {
                    round: 2,
                    rmws: broadcast(self.params.n, |i| Rmw::StrawmanAppend {
                        piece: pieces[i - 1].clone(),
                        ts,
                    }),
                }
            }
            Phase::Append => Step::Return(Outcome::WriteOk {
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

/// Strawman reads decode the largest timestamp with `k` pieces in the quorum.
pub type StrawmanRead = crate::safe_register::SafeRead;

pub fn initial_objects(params: &RegisterParams) -> Vec<ObjectState> {
    params
        .v0_pieces
        .iter()
        .map(|p| ObjectState::Strawman(StrawmanObjectState::initial(p.clone())))
        .collect()
}
