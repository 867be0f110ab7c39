//! The per-step sets C, C⁺, C⁻ and F used by the adversary and the storage trace.

use std::collections::{BTreeMap, BTreeSet};

use crate::base_object::ObjectState;
use crate::types::{ClientId, TimeStamp};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sets {
    /// Clients with an outstanding write.
    pub c: BTreeSet<ClientId>,
    /// Outstanding writers with at least one chunk of their write stored in some object.
    pub c_plus: BTreeSet<ClientId>,
    pub c_minus: BTreeSet<ClientId>,
    /// 1-based indices of objects holding `k` distinct pieces (D bits) of one write.
    pub f: BTreeSet<usize>,
    /// Chunks stored anywhere that belong to some write other than the initial one.
    pub attributed_chunks: u64,
}

/// An outstanding write: its client and, once picked, its timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutstandingWrite {
    pub client: ClientId,
    pub ts: Option<TimeStamp>,
}

/// Computes the sets from the outstanding writes and the object states.
///
/// Bits are attributed to writes through chunk timestamps. Chunks of the
/// initial value are attributed to the fictional initial write, which is
/// never outstanding and never places an object in F. Crashed objects keep
/// their state and are included. Only bits in objects are counted: clients
/// in this simulator do not relay data to each other.
pub fn compute_sets(outstanding: &[OutstandingWrite], objects: &[ObjectState], k: usize) -> Sets {
    let mut stored_ts: BTreeSet<TimeStamp> = BTreeSet::new();
    let mut f = BTreeSet::new();
    let mut attributed = 0u64;
    for (i, obj) in objects.iter().enumerate() {
        let mut per_ts: BTreeMap<TimeStamp, BTreeSet<usize>> = BTreeMap::new();
        for chunk in obj.chunks() {
            if chunk.ts == TimeStamp::ZERO {
                continue;
            }
            attributed += 1;
            stored_ts.insert(chunk.ts);
            per_ts
                .entry(chunk.ts)
                .or_default()
                .insert(chunk.piece.index());
        }
        if per_ts.values().any(|idx| idx.len() >= k) {
            f.insert(i + 1);
        }
    }

    let mut sets = Sets {
        f,
        attributed_chunks: attributed,
        ..Sets::default()
    };
    for w in outstanding {
        sets.c.insert(w.client);
        if w.ts.is_some_and(|ts| stored_ts.contains(&ts)) {
            sets.c_plus.insert(w.client);
        }
    }
    sets.c_minus = sets.c.difference(&sets.c_plus).copied().collect();
    sets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base_object::{RegularObjectState, StrawmanObjectState};
    use crate::client::{auto_value, RegisterParams};
    use crate::types::Chunk;

    fn ts(n: u64, c: u32) -> TimeStamp {
        TimeStamp::new(n, ClientId(c))
    }

    #[test]
    fn no_outstanding_writes_gives_empty_sets() {
        let p = RegisterParams::new(4, 1, 2, 64).unwrap();
        let objs = crate::safe_register::initial_objects(&p);
        let s = compute_sets(&[], &objs, 2);
        assert_eq!(s, Sets::default());
    }

    #[test]
    fn replication_puts_an_object_in_f_after_one_update() {
        let p = RegisterParams::new(3, 1, 1, 64).unwrap();
        let mut objs = crate::safe_register::initial_objects(&p);
        let pieces = p.encode(&auto_value(ClientId(1), 1, 64));
        if let ObjectState::Safe(s) = &mut objs[1] {
            s.update(&pieces[1], ts(1, 1));
        }
        let w = [OutstandingWrite {
            client: ClientId(1),
            ts: Some(ts(1, 1)),
        }];
        let s = compute_sets(&w, &objs, 1);
        assert_eq!(s.f, BTreeSet::from([2]));
        assert_eq!(s.c_plus, BTreeSet::from([ClientId(1)]));
        assert!(s.c_minus.is_empty());
        assert_eq!(s.attributed_chunks, 1);
    }

    #[test]
    fn coded_pieces_do_not_enter_f() {
        let p = RegisterParams::new(4, 1, 2, 64).unwrap();
        let pieces = p.encode(&auto_value(ClientId(1), 1, 64));
        let mut objs: Vec<ObjectState> = p
            .v0_pieces
            .iter()
            .map(|pc| ObjectState::Strawman(StrawmanObjectState::initial(pc.clone())))
            .collect();
        for (i, o) in objs.iter_mut().enumerate() {
            if let ObjectState::Strawman(s) = o {
                s.append(&pieces[i], ts(1, 1));
            }
        }
        let w = [
            OutstandingWrite {
                client: ClientId(1),
                ts: Some(ts(1, 1)),
            },
            OutstandingWrite {
                client: ClientId(2),
                ts: Some(ts(1, 2)),
            },
            OutstandingWrite {
                client: ClientId(3),
                ts: None,
            },
        ];
        let s = compute_sets(&w, &objs, 2);
        assert!(s.f.is_empty());
        assert_eq!(s.c.len(), 3);
        assert_eq!(s.c_plus, BTreeSet::from([ClientId(1)]));
        assert_eq!(s.c_minus, BTreeSet::from([ClientId(2), ClientId(3)]));
        // C⁺ lower-bounds the stored bits of outstanding writes.
        assert!(s.attributed_chunks >= s.c_plus.len() as u64);
    }

    #[test]
    fn full_replica_enters_f_and_initial_value_does_not() {
        let p = RegisterParams::new(4, 1, 2, 64).unwrap();
        let pieces = p.encode(&auto_value(ClientId(1), 1, 64));
        let mut reg = RegularObjectState::initial(p.v0_pieces[0].clone());
        reg.v_p
            .push(Chunk::new(TimeStamp::ZERO, p.v0_pieces[1].clone()));
        let mut objs = vec![ObjectState::Regular(reg.clone()), ObjectState::Regular(reg)];
        assert!(compute_sets(&[], &objs, 2).f.is_empty());
        if let ObjectState::Regular(s) = &mut objs[1] {
            s.v_f = pieces[..2]
                .iter()
                .map(|pc| Chunk::new(ts(1, 1), pc.clone()))
                .collect();
        }
        assert_eq!(compute_sets(&[], &objs, 2).f, BTreeSet::from([2]));
    }
}
