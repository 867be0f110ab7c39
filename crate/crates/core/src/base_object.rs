//! Fault-prone base objects: per-object state and the atomic RMW functions
//! the register protocols apply to it.
//!
//! Every transition here is applied by the simulator in a single step, so a
//! function body is one atomic read-modify-write.

use std::sync::Arc;

use crate::codec::Piece;
use crate::storage::{chunks_bits, Bits};
use crate::types::{Chunk, TimeStamp};

/// State of an object running the safe protocol: exactly one chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafeObjectState {
    pub chunk: Chunk,
}

impl SafeObjectState {
    pub fn initial(v0_piece: Piece) -> Self {
        Self {
            chunk: Chunk::new(TimeStamp::ZERO, v0_piece),
        }
    }

    /// Overwrites the stored chunk iff `ts` is newer. Returns whether it changed.
    pub fn update(&mut self, piece: &Piece, ts: TimeStamp) -> bool {
        if ts > self.chunk.ts {
            self.chunk = Chunk::new(ts, piece.clone());
            true
        } else {
            false
        }
    }
}

/// State of an object running the regular protocol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularObjectState {
    pub stored_ts: TimeStamp,
    /// Up to `k` chunks, each the object's own piece of a different write.
    pub v_p: Vec<Chunk>,
    /// Empty, a full replica (`k` chunks of one write), or one chunk left by GC.
    pub v_f: Vec<Chunk>,
}

impl RegularObjectState {
    pub fn initial(v0_piece: Piece) -> Self {
        Self {
            stored_ts: TimeStamp::ZERO,
            v_p: vec![Chunk::new(TimeStamp::ZERO, v0_piece)],
            v_f: Vec::new(),
        }
    }

    /// The update RMW. `index` is this object's 1-based index and `write_set`
    /// the writer's full encoding. The branches run in pseudocode order: the
    /// capacity test on `V_p` comes before stale pieces are removed.
    pub fn update(
        &mut self,
        k: usize,
        index: usize,
        write_set: &[Piece],
        ts: TimeStamp,
        stored_ts_in: TimeStamp,
    ) {
        if ts <= self.stored_ts {
            return;
        }
        if self.v_p.len() < k {
            self.v_p.retain(|c| c.ts >= stored_ts_in);
            self.v_p.push(Chunk::new(ts, write_set[index - 1].clone()));
        } else if self.v_f.first().is_none_or(|c| c.ts < ts) {
            self.v_f = write_set[..k]
                .iter()
                .map(|p| Chunk::new(ts, p.clone()))
                .collect();
        }
        self.stored_ts = self.stored_ts.max(stored_ts_in);
    }

    /// The garbage-collection RMW of the write with timestamp `ts`.
    pub fn gc(&mut self, index: usize, write_set: &[Piece], ts: TimeStamp) {
        self.v_p.retain(|c| c.ts >= ts);
        self.v_f.retain(|c| c.ts >= ts);
        if self.v_f.iter().any(|c| c.ts == ts) {
            self.v_f = vec![Chunk::new(ts, write_set[index - 1].clone())];
        }
        self.stored_ts = self.stored_ts.max(ts);
    }

    pub fn chunks(&self) -> impl Iterator<Item = &Chunk> {
        self.v_p.iter().chain(&self.v_f)
    }

    /// Checks the structural invariants of the regular object state.
    pub fn check_invariants(&self, k: usize, index: usize) -> Result<(), String> {
        if self.v_p.len() > k {
            return Err(format!("|V_p| = {} > k = {k}", self.v_p.len()));
        }
        for (i, c) in self.v_p.iter().enumerate() {
            if c.piece.index() != index {
                return Err(format!(
                    "V_p holds piece {} on object {index}",
                    c.piece.index()
                ));
            }
            if self.v_p[..i].iter().any(|d| d.ts == c.ts) {
                return Err(format!("V_p holds two pieces of {}", c.ts));
            }
        }
        if let Some(first) = self.v_f.first() {
            if self.v_f.iter().any(|c| c.ts != first.ts) {
                return Err("V_f mixes timestamps".into());
            }
            if self.v_f.len() != 1 && self.v_f.len() != k {
                return Err(format!(
                    "|V_f| = {} is neither 1 nor k = {k}",
                    self.v_f.len()
                ));
            }
        }
        Ok(())
    }
}

/// State of an object running the append-only strawman: one chunk per
/// distinct timestamp, never removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrawmanObjectState {
    pub chunks: Vec<Chunk>,
}

impl StrawmanObjectState {
    pub fn initial(v0_piece: Piece) -> Self {
        Self {
            chunks: vec![Chunk::new(TimeStamp::ZERO, v0_piece)],
        }
    }

    pub fn append(&mut self, piece: &Piece, ts: TimeStamp) -> bool {
        if self.chunks.iter().any(|c| c.ts == ts) {
            return false;
        }
        self.chunks.push(Chunk::new(ts, piece.clone()));
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectState {
    Safe(SafeObjectState),
    Regular(RegularObjectState),
    Strawman(StrawmanObjectState),
}

impl ObjectState {
    /// Every chunk the object currently stores.
    pub fn chunks(&self) -> Box<dyn Iterator<Item = &Chunk> + '_> {
        match self {
            ObjectState::Safe(s) => Box::new(std::iter::once(&s.chunk)),
            ObjectState::Regular(s) => Box::new(s.chunks()),
            ObjectState::Strawman(s) => Box::new(s.chunks.iter()),
        }
    }

    pub fn chunk_count(&self) -> usize {
        match self {
            ObjectState::Safe(_) => 1,
            ObjectState::Regular(s) => s.v_p.len() + s.v_f.len(),
            ObjectState::Strawman(s) => s.chunks.len(),
        }
    }

    /// Idealized data bits: `D / k` per stored chunk, metadata excluded.
    pub fn storage_bits(&self, d_bits: u64, k: usize) -> Bits {
        chunks_bits(self.chunk_count() as u64, d_bits, k)
    }

    /// Timestamp that gates this object: `storedTS` for regular objects and
    /// the stored chunk's timestamp otherwise.
    pub fn gate_ts(&self) -> TimeStamp {
        match self {
            ObjectState::Safe(s) => s.chunk.ts,
            ObjectState::Regular(s) => s.stored_ts,
            ObjectState::Strawman(s) => s
                .chunks
                .iter()
                .map(|c| c.ts)
                .max()
                .unwrap_or(TimeStamp::ZERO),
        }
    }
}

/// An RMW a client triggers on one base object.
#[derive(Debug, Clone)]
pub enum Rmw {
    /// Returns a snapshot of the state.
    Read,
    SafeUpdate {
        piece: Piece,
        ts: TimeStamp,
    },
    RegularUpdate {
        write_set: Arc<[Piece]>,
        ts: TimeStamp,
        stored_ts: TimeStamp,
    },
    Gc {
        write_set: Arc<[Piece]>,
        ts: TimeStamp,
    },
    StrawmanAppend {
        piece: Piece,
        ts: TimeStamp,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RmwKind {
    Read,
    Update,
    Gc,
}

impl Rmw {
    pub fn kind(&self) -> RmwKind {
        match self {
            Rmw::Read => RmwKind::Read,
            Rmw::SafeUpdate { .. } | Rmw::RegularUpdate { .. } | Rmw::StrawmanAppend { .. } => {
                RmwKind::Update
            }
            Rmw::Gc { .. } => RmwKind::Gc,
        }
    }
}

#[derive(Debug, Clone)]
pub enum RmwReply {
    Snapshot(ObjectState),
    Ack,
}

/// Protocol mismatch between an RMW and the state it was applied to.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{rmw} cannot be applied to a {state} object")]
pub struct RmwMismatch {
    pub rmw: &'static str,
    pub state: &'static str,
}

/// Applies `rmw` atomically to the object with 1-based `index`.
pub fn apply(
    state: &mut ObjectState,
    index: usize,
    k: usize,
    rmw: &Rmw,
) -> Result<RmwReply, RmwMismatch> {
    let reply = match (rmw, &mut *state) {
        (Rmw::Read, s) => RmwReply::Snapshot(s.clone()),
        (Rmw::SafeUpdate { piece, ts }, ObjectState::Safe(s)) => {
            s.update(piece, *ts);
            RmwReply::Ack
        }
        (
            Rmw::RegularUpdate {
                write_set,
                ts,
                stored_ts,
            },
            ObjectState::Regular(s),
        ) => {
            s.update(k, index, write_set, *ts, *stored_ts);
            RmwReply::Ack
        }
        (Rmw::Gc { write_set, ts }, ObjectState::Regular(s)) => {
            s.gc(index, write_set, *ts);
            RmwReply::Ack
        }
        (Rmw::StrawmanAppend { piece, ts }, ObjectState::Strawman(s)) => {
            s.append(piece, *ts);
            RmwReply::Ack
        }
        (rmw, state) => {
            return Err(RmwMismatch {
                rmw: match rmw {
                    Rmw::Read => "read",
                    Rmw::SafeUpdate { .. } => "safe update",
                    Rmw::RegularUpdate { .. } => "regular update",
                    Rmw::Gc { .. } => "gc",
                    Rmw::StrawmanAppend { .. } => "append",
                },
                state: match state {
                    ObjectState::Safe(_) => "safe",
                    ObjectState::Regular(_) => "regular",
                    ObjectState::Strawman(_) => "strawman",
                },
            })
        }
    };
    Ok(reply)
}
