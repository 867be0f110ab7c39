//! Client-side vocabulary shared by the register protocols.
//!
//! A high-level operation is a state machine driven by the simulator. The
//! simulator asks it for the next round of RMWs, feeds it the replies of that
//! round, and lets it move on once [`OpMachine::ready`] holds.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::base_object::{Rmw, RmwReply};
use crate::codec::{self, Piece, Value};
use crate::types::{Chunk, ClientId, TimeStamp};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParamError {
    #[error("n = {n} must equal 2f + k = {}", 2 * f + k)]
    QuorumMismatch { n: usize, f: usize, k: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("value size must be a positive multiple of 8 bits, got {0}")]
    BadValueSize(u64),
    #[error(transparent)]
    Codec(#[from] codec::CodecError),
}

/// The parameters every client and object of a run agrees on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterParams {
    pub n: usize,
    pub f: usize,
    pub k: usize,
    pub d_bits: u64,
    /// The initial value `v0`.
    pub v0: Value,
    /// `encode(v0)`, the initial piece of every object.
    pub v0_pieces: Vec<Piece>,
}

impl RegisterParams {
    /// Validates `n = 2f + k` and builds the all-zero initial value of `d_bits` bits.
    pub fn new(n: usize, f: usize, k: usize, d_bits: u64) -> Result<Self, ParamError> {
        if k == 0 {
            return Err(ParamError::ZeroK);
        }
        if n != 2 * f + k {
            return Err(ParamError::QuorumMismatch { n, f, k });
        }
        if d_bits == 0 || !d_bits.is_multiple_of(8) {
            return Err(ParamError::BadValueSize(d_bits));
        }
        let v0 = Value::zeroed(d_bits)?;
        let v0_pieces = codec::encode(&v0, n, k)?;
        Ok(Self {
            n,
            f,
            k,
            d_bits,
            v0,
            v0_pieces,
        })
    }

    /// Number of responses each round waits for.
    pub fn quorum(&self) -> usize {
        self.n - self.f
    }

    pub fn encode(&self, v: &Value) -> Vec<Piece> {
        codec::encode(v, self.n, self.k).expect("parameters validated at construction")
    }

    /// Decodes the pieces of one write. Pieces of a single timestamp always
    /// come from one encode call, so failure is a protocol bug.
    pub fn decode<'a>(&self, pieces: impl IntoIterator<Item = &'a Piece>) -> Value {
        codec::decode(pieces, self.n, self.k).expect("chunks of one timestamp decode")
    }
}

/// One entry of a client script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScriptOp {
    /// Write a fresh value derived from the client id and operation number.
    Write,
    WriteValue(Value),
    Read,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientProgram {
    pub id: ClientId,
    pub script: Vec<ScriptOp>,
    /// Restart the script after its last operation.
    pub repeat: bool,
}

impl ClientProgram {
    pub fn new(id: ClientId, script: Vec<ScriptOp>) -> Self {
        Self {
            id,
            script,
            repeat: false,
        }
    }

    pub fn writer(id: u32, writes: usize) -> Self {
        Self::new(ClientId(id), vec![ScriptOp::Write; writes])
    }

    pub fn reader(id: u32, reads: usize) -> Self {
        Self::new(ClientId(id), vec![ScriptOp::Read; reads])
    }

    pub fn repeating(mut self) -> Self {
        self.repeat = true;
        self
    }
}

/// A deterministic value for the `seq`-th write of `client`. Different
/// `(client, seq)` pairs give different values whenever `d_bits >= 64`, and
/// none of them is the all-zero initial value.
pub fn auto_value(client: ClientId, seq: u64, d_bits: u64) -> Value {
    let len = d_bits.div_ceil(8) as usize;
    let mut bytes = vec![0u8; len];
    ChaCha8Rng::seed_from_u64((u64::from(client.0) << 40) ^ seq).fill_bytes(&mut bytes);
    let mut tag = [0u8; 8];
    tag[..4].copy_from_slice(&client.0.to_be_bytes());
    tag[4..].copy_from_slice(&(seq as u32).to_be_bytes());
    let n = tag.len().min(len);
    bytes[..n].copy_from_slice(&tag[..n]);
    if bytes.iter().all(|&b| b == 0) {
        bytes[len - 1] = 1;
    }
    Value::with_bit_length(bytes, d_bits).expect("length matches bit count")
}

/// What an operation does when the simulator lets its client act.
#[derive(Debug, Clone)]
pub enum Step {
    /// Trigger these RMWs (object index, RMW) as round `round`.
    Trigger {
        round: u32,
        rmws: Vec<(usize, Rmw)>,
    },
    Return(Outcome),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    WriteOk {
        ts: TimeStamp,
    },
    /// `ts` is the timestamp of the decoded chunks, or `None` when a safe
    /// read fell back to `v0` without finding `k` matching chunks.
    ReadOk {
        value: Value,
        ts: Option<TimeStamp>,
    },
    /// A read exhausted its round budget.
    GaveUp,
}

/// A high-level operation in progress.
pub trait OpMachine: Send {
    /// Records the reply of an RMW from `round`. Replies from other rounds and
    /// replies arriving after the quorum is complete are ignored.
    fn on_reply(&mut self, round: u32, object: usize, reply: RmwReply);

    /// Whether the client may act: the op has not started yet or the current
    /// round has its quorum.
    fn ready(&self) -> bool;

    /// Called when the client acts; only valid while [`OpMachine::ready`] holds.
    fn advance(&mut self) -> Step;

    /// The timestamp of a write once it has picked one.
    fn write_ts(&self) -> Option<TimeStamp> {
        None
    }

    /// Rounds triggered so far.
    fn rounds(&self) -> u32;
}

/// Replies collected for the current round, frozen once `needed` arrive.
#[derive(Debug, Clone)]
pub struct Quorum {
    round: u32,
    needed: usize,
    replies: Vec<(usize, RmwReply)>,
}

impl Quorum {
    pub fn idle(needed: usize) -> Self {
        Self {
            round: 0,
            needed,
            replies: Vec::new(),
        }
    }

    /// Starts round `round`, discarding everything collected before.
    pub fn start(&mut self, round: u32) {
        self.round = round;
        self.replies.clear();
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn offer(&mut self, round: u32, object: usize, reply: RmwReply) {
        if round == self.round && round != 0 && self.replies.len() < self.needed {
            debug_assert!(
                self.replies.iter().all(|(o, _)| *o != object),
                "duplicate reply from object {object}"
            );
            self.replies.push((object, reply));
        }
    }

    pub fn complete(&self) -> bool {
        self.replies.len() >= self.needed
    }

    pub fn replies(&self) -> &[(usize, RmwReply)] {
        &self.replies
    }
}

/// `rmw` on every object `1..=n`.
pub fn broadcast(n: usize, rmw: impl Fn(usize) -> Rmw) -> Vec<(usize, Rmw)> {
    (1..=n).map(|i| (i, rmw(i))).collect()
}

/// Chunks grouped by timestamp, keeping one piece per distinct index.
#[derive(Debug, Default, Clone)]
pub struct ChunkIndex {
    by_ts: BTreeMap<TimeStamp, BTreeMap<usize, Piece>>,
}

impl ChunkIndex {
    pub fn insert(&mut self, chunk: &Chunk) {
        self.by_ts
            .entry(chunk.ts)
            .or_default()
            .entry(chunk.piece.index())
            .or_insert_with(|| chunk.piece.clone());
    }

    pub fn max_num(&self) -> u64 {
        self.by_ts.keys().map(|t| t.num).max().unwrap_or(0)
    }

    /// The largest timestamp `>= floor` with at least `k` distinct pieces.
    pub fn max_decodable(&self, k: usize, floor: TimeStamp) -> Option<(TimeStamp, Vec<&Piece>)> {
        self.by_ts
            .range(floor..)
            .rev()
            .find(|(_, pieces)| pieces.len() >= k)
            .map(|(ts, pieces)| (*ts, pieces.values().collect()))
    }
}
