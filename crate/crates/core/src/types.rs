//! Identifiers, timestamps, chunks and operation histories shared by every
//! protocol, the simulator and the checkers.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::{Piece, Value};

/// A client of the emulated register. Id 0 belongs to the fictional writer
/// of the initial value and is never handed to a real client.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClientId(pub u32);

impl ClientId {
    pub const INITIAL: ClientId = ClientId(0);
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// `<num, client>`, ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeStamp {
    pub num: u64,
    pub client: ClientId,
}

impl TimeStamp {
    /// `<0, 0>`, the timestamp of the initial value and the minimum of the order.
    pub const ZERO: TimeStamp = TimeStamp {
        num: 0,
        client: ClientId::INITIAL,
    };

    pub fn new(num: u64, client: ClientId) -> Self {
        Self { num, client }
    }
}

impl fmt::Display for TimeStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{},{}>", self.num, self.client.0)
    }
}

pub fn ts_less(a: TimeStamp, b: TimeStamp) -> bool {
    a < b
}

/// A piece tagged with the timestamp of the write that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chunk {
    pub ts: TimeStamp,
    pub piece: Piece,
}

impl Chunk {
    pub fn new(ts: TimeStamp, piece: Piece) -> Self {
        Self { ts, piece }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Write,
    Read,
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OpKind::Write => "write",
            OpKind::Read => "read",
        })
    }
}

/// One high-level operation. Times are global simulator step indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationRecord {
    pub id: usize,
    pub client: ClientId,
    pub kind: OpKind,
    /// The written value, or the value a read returned (`None` until it returns).
    pub value: Option<Value>,
    pub invoke_time: u64,
    #[serde(with = "outstanding")]
    pub return_time: Option<u64>,
    /// Timestamp chosen by a write, or the timestamp of the chunks a read decoded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ts: Option<TimeStamp>,
    /// Number of rounds the operation triggered.
    #[serde(default)]
    pub rounds: u32,
    /// Step at which a read stopped after exhausting its round budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gave_up: Option<u64>,
}

impl OperationRecord {
    pub fn is_write(&self) -> bool {
        self.kind == OpKind::Write
    }

    pub fn is_read(&self) -> bool {
        self.kind == OpKind::Read
    }

    pub fn returned(&self) -> bool {
        self.return_time.is_some()
    }
}

/// `a` precedes `b` when `a` returned strictly before `b` was invoked.
pub fn precedes(a: &OperationRecord, b: &OperationRecord) -> bool {
    matches!(a.return_time, Some(r) if r < b.invoke_time)
}

/// Two operations are concurrent when neither precedes the other.
pub fn concurrent(a: &OperationRecord, b: &OperationRecord) -> bool {
    !precedes(a, b) && !precedes(b, a)
}

/// How a simulated run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunEnd {
    /// Every operation finished and no RMW is pending.
    Quiescent,
    /// Operations are outstanding but the scheduler has nothing it is willing to run.
    Stalled,
    /// The step limit was reached.
    Truncated,
}

impl fmt::Display for RunEnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunEnd::Quiescent => "quiescent",
            RunEnd::Stalled => "stalled",
            RunEnd::Truncated => "truncated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct History {
    /// The register's initial value, attributed to the fictional write at time 0.
    pub initial: Value,
    pub ops: Vec<OperationRecord>,
    /// Number of simulator steps the run took.
    pub steps: u64,
    pub end: RunEnd,
    #[serde(default)]
    pub crashed_clients: BTreeSet<ClientId>,
}

impl History {
    pub fn new(initial: Value) -> Self {
        Self {
            initial,
            ops: Vec::new(),
            steps: 0,
            end: RunEnd::Quiescent,
            crashed_clients: BTreeSet::new(),
        }
    }

    pub fn precedes(&self, a: &OperationRecord, b: &OperationRecord) -> bool {
        precedes(a, b)
    }

    pub fn writes(&self) -> impl Iterator<Item = &OperationRecord> {
        self.ops.iter().filter(|o| o.is_write())
    }

    pub fn reads(&self) -> impl Iterator<Item = &OperationRecord> {
        self.ops.iter().filter(|o| o.is_read())
    }

    pub fn is_correct(&self, client: ClientId) -> bool {
        !self.crashed_clients.contains(&client)
    }

    /// The history restricted to `ids`, keeping everything else unchanged.
    pub fn restrict(&self, ids: &[usize]) -> History {
        let keep: BTreeSet<usize> = ids.iter().copied().collect();
        History {
            initial: self.initial.clone(),
            ops: self
                .ops
                .iter()
                .filter(|o| keep.contains(&o.id))
                .cloned()
                .collect(),
            steps: self.steps,
            end: self.end,
            crashed_clients: self.crashed_clients.clone(),
        }
    }
}

mod outstanding {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    const MARK: &str = "OUTSTANDING";

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Step(u64),
        Mark(String),
    }

    pub fn serialize<S: Serializer>(v: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(t) => Repr::Step(*t).serialize(s),
            None => Repr::Mark(MARK.into()).serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Step(t) => Ok(Some(t)),
            Repr::Mark(m) if m == MARK => Ok(None),
            Repr::Mark(m) => Err(serde::de::Error::custom(format!(
                "expected a step or {MARK}, got {m:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn op(id: usize, invoke: u64, ret: Option<u64>) -> OperationRecord {
        OperationRecord {
            id,
            client: ClientId(id as u32 + 1),
            kind: OpKind::Write,
            value: None,
            invoke_time: invoke,
            return_time: ret,
            ts: None,
            rounds: 0,
            gave_up: None,
        }
    }

    #[test]
    fn timestamp_order() {
        assert!(ts_less(TimeStamp::ZERO, TimeStamp::new(1, ClientId(0))));
        assert!(ts_less(
            TimeStamp::new(2, ClientId(1)),
            TimeStamp::new(2, ClientId(3))
        ));
        assert!(ts_less(
            TimeStamp::new(1, ClientId(9)),
            TimeStamp::new(2, ClientId(1))
        ));
    }

    proptest! {
        #[test]
        fn ts_less_is_irreflexive_and_asymmetric(a in (0u64..50, 0u32..5), b in (0u64..50, 0u32..5)) {
            let a = TimeStamp::new(a.0, ClientId(a.1));
            let b = TimeStamp::new(b.0, ClientId(b.1));
            prop_assert!(!ts_less(a, a));
            prop_assert!(!(ts_less(a, b) && ts_less(b, a)));
            prop_assert!(!ts_less(a, TimeStamp::ZERO));
        }

        #[test]
        fn precedence_is_a_strict_partial_order(
            spans in proptest::collection::vec((0u64..40, 1u64..10, any::<bool>()), 1..8)
        ) {
            let ops: Vec<_> = spans
                .iter()
                .enumerate()
                .map(|(i, &(s, len, done))| op(i, s, done.then_some(s + len)))
                .collect();
            for a in &ops {
                prop_assert!(!precedes(a, a));
                for b in &ops {
                    prop_assert!(!(precedes(a, b) && precedes(b, a)));
                    for c in &ops {
                        if precedes(a, b) && precedes(b, c) {
                            prop_assert!(precedes(a, c));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn precedence_examples() {
        let a = op(0, 1, Some(3));
        let b = op(1, 4, Some(6));
        assert!(precedes(&a, &b));
        assert!(!precedes(&b, &a));

        let c = op(2, 2, Some(5));
        assert!(concurrent(&a, &c) && concurrent(&c, &b));

        let pending = op(3, 0, None);
        assert!(!precedes(&pending, &b));
        assert!(precedes(&a, &op(4, 4, None)));
    }

    #[test]
    fn outstanding_return_time_round_trips() {
        let rec = op(0, 5, None);
        let json = serde_json::to_string(&rec).unwrap();
        assert!(json.contains(r#""return_time":"OUTSTANDING""#), "{json}");
        assert_eq!(serde_json::from_str::<OperationRecord>(&json).unwrap(), rec);
        let done = op(1, 5, Some(9));
        let json = serde_json::to_string(&done).unwrap();
        assert_eq!(
            serde_json::from_str::<OperationRecord>(&json).unwrap(),
            done
        );
    }
}
