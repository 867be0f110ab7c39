//! The witness checkers against the brute-force oracle on random small
//! histories, including ones that no protocol would produce.

use ecreg::checker::{
    check_strong_regularity, check_strongly_safe, check_weak_regularity, CheckMode, CheckReport,
    Verdict,
};
use ecreg::codec::Value;
use ecreg::types::{ClientId, History, OpKind, OperationRecord, RunEnd};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn val(b: u8) -> Value {
    Value::new(vec![b]).unwrap()
}

/// `distinct`: writes carry distinct values, none equal to the initial one.
fn random_history(rng: &mut ChaCha8Rng, distinct: bool) -> History {
    let writes = rng.gen_range(1..=4);
    let reads = rng.gen_range(1..=3);
    let mut h = History::new(val(0));
    h.end = RunEnd::Quiescent;
    for i in 0..writes + reads {
        let kind = if i < writes {
            OpKind::Write
        } else {
            OpKind::Read
        };
        let invoke = rng.gen_range(1..=10u64);
        let ret = (rng.gen_bool(0.85)).then(|| invoke + rng.gen_range(1..=5));
        let value = match kind {
            OpKind::Write if distinct => Some(val(i as u8 + 1)),
            OpKind::Write => Some(val(rng.gen_range(0..=2))),
            OpKind::Read => ret.map(|_| val(rng.gen_range(0..=writes as u8))),
        };
        h.ops.push(OperationRecord {
            id: i,
            client: ClientId(i as u32 + 1),
            kind,
            value,
            invoke_time: invoke,
            return_time: ret,
            ts: None,
            rounds: 1,
            gave_up: None,
        });
    }
    h.steps = 16;
    h
}

#[test]
fn witness_and_brute_force_agree() {
    type Check = fn(&History, CheckMode) -> CheckReport;
    let checks: [(&str, Check); 3] = [
        ("weak", check_weak_regularity),
        ("strong", check_strong_regularity),
        ("strongly-safe", check_strongly_safe),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut seen = [[0usize; 2]; 3];
    for round in 0..6_000 {
        let h = random_history(&mut rng, round % 3 != 0);
        for (i, (name, check)) in checks.iter().enumerate() {
            let a = check(&h, CheckMode::Witness);
            let b = check(&h, CheckMode::BruteForce);
            assert_eq!(
                a.verdict, b.verdict,
                "{name} round {round}: {a} / {b}\n{h:#?}"
            );
            assert_ne!(a.verdict, Verdict::Inconclusive);
            seen[i][usize::from(a.passed())] += 1;
        }
    }
    // Both verdicts occur often enough for the comparison to mean something.
    for (i, [fails, passes]) in seen.iter().enumerate() {
        assert!(
            *fails > 300 && *passes > 300,
            "check {i}: {fails} fails, {passes} passes"
        );
    }
}

/// Every order of invocation and return events for `ops` operations, as
/// (invoke, return) times.
fn interval_layouts(ops: usize) -> Vec<Vec<(u64, u64)>> {
    fn go(t: u64, times: &mut Vec<(Option<u64>, Option<u64>)>, out: &mut Vec<Vec<(u64, u64)>>) {
        if times.iter().all(|(_, r)| r.is_some()) {
            out.push(times.iter().map(|(i, r)| (i.unwrap(), r.unwrap())).collect());
            return;
        }
        for j in 0..times.len() {
            let saved = times[j];
            match saved {
                (None, _) => times[j].0 = Some(t),
                (Some(_), None) => times[j].1 = Some(t),
                _ => continue,
            }
            go(t + 1, times, out);
            times[j] = saved;
        }
    }
    let mut out = Vec::new();
    go(1, &mut vec![(None, None); ops], &mut out);
    out
}

#[test]
fn witness_and_brute_force_agree_on_every_small_history() {
    type Check = fn(&History, CheckMode) -> CheckReport;
    let checks: [Check; 3] = [check_weak_regularity, check_strong_regularity, check_strongly_safe];
    let mut histories = 0;
    for writes in 1..=3usize {
        for reads in 1..=2usize {
            let ops = writes + reads;
            let mut seen = std::collections::HashSet::new();
            for layout in interval_layouts(ops) {
                let key: Vec<bool> =
                    (0..ops).flat_map(|a| (0..ops).map(move |b| (a, b))).map(|(a, b)| layout[a].1 < layout[b].0).collect();
                if !seen.insert(key) {
                    continue;
                }
                // Distinct write values, then the first two writes sharing a value.
                let patterns: &[&[u8]] = if writes >= 2 { &[&[1, 2, 3], &[1, 1, 2]] } else { &[&[1]] };
                for pattern in patterns {
                    for choice in 0..(writes as u32 + 1).pow(reads as u32) {
                        let mut h = History::new(val(0));
                        for (i, &(inv, ret)) in layout.iter().enumerate() {
                            let (kind, v) = if i < writes {
                                (OpKind::Write, pattern[i])
                            } else {
                                let r = (i - writes) as u32;
                                (OpKind::Read, (choice / (writes as u32 + 1).pow(r) % (writes as u32 + 1)) as u8)
                            };
                            let v = if kind == OpKind::Read && v > 0 { pattern[v as usize - 1] } else { v };
                            h.ops.push(OperationRecord {
                                id: i,
                                client: ClientId(i as u32 + 1),
                                kind,
                                value: Some(val(v)),
                                invoke_time: inv,
                                return_time: Some(ret),
                                ts: None,
                                rounds: 1,
                                gave_up: None,
                            });
                        }
                        h.steps = 2 * ops as u64;
                        histories += 1;
                        for check in checks {
                            let a = check(&h, CheckMode::Witness);
                            let b = check(&h, CheckMode::BruteForce);
                            assert_eq!(a.verdict, b.verdict, "{a} / {b}\n{h:#?}");
                        }
                    }
                }
            }
        }
    }
    assert!(histories > 10_000, "{histories}");
}
