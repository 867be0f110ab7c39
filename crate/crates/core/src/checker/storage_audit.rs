//! Storage bounds checked row by row against a trace.

use num_rational::Ratio;

use super::{CheckMode, CheckReport, Witness};
use crate::sim::{Config, Links, Policy, Protocol, StorageTrace};
use crate::storage::{format_bits, Bits};

const P: &str = "storage";

/// Audits a storage trace against the bounds of its protocol.
///
/// * safe: every row holds exactly `n·D/k` bits;
/// * regular: every object holds at most `2D` bits and, when
///   `c_observed ≤ k−2`, at most `(c_observed+1)·D/k` bits; a quiescent run
///   with no outstanding write ends with `D/k` bits on every live object
///   (at most that under unordered links, where a collection can overtake
///   the update it follows);
/// * strawman: storage never shrinks.
///
/// For every protocol, writes that are outstanding and already stored somewhere
/// hold at least one chunk each. Under the adversary, no write may return
/// while at most `f` objects hold a full value.
pub fn check_storage_bounds(
    trace: &StorageTrace,
    config: &Config,
    c_observed: usize,
) -> CheckReport {
    let m = &trace.meta;
    let (n, k, d) = (m.n as u64, m.k as u64, m.d_bits);
    let chunk = Ratio::new(d, k);
    let fmt = |b: Bits| format_bits(b);
    let mut notes = Vec::new();
    let fail = |step: u64, detail: String| {
        CheckReport::fail(P, CheckMode::Witness, Witness::step(step, detail))
    };

    let adaptive =
        (m.protocol == Protocol::Regular && c_observed + 2 <= m.k).then_some(c_observed as u64);
    if let Some(c) = adaptive {
        notes.push(format!(
            "adaptive bound with c = {c}: {} bits",
            fmt(chunk * (n * (c + 1)))
        ));
    }
    let mut prev_total: Option<Bits> = None;
    for row in &trace.rows {
        let total = trace.total_bits(row);
        match m.protocol {
            Protocol::Safe => {
                let want = chunk * n;
                if total != want {
                    return fail(
                        row.step,
                        format!("total {} bits, expected exactly {}", fmt(total), fmt(want)),
                    );
                }
            }
            Protocol::Regular => {
                let cap = Bits::from_integer(n * 2 * d);
                if total > cap {
                    return fail(
                        row.step,
                        format!("total {} bits exceeds (2f+k)·2D = {}", fmt(total), fmt(cap)),
                    );
                }
                for obj in 1..=m.n {
                    let bits = trace.object_bits(row, obj);
                    if bits > Bits::from_integer(2 * d) {
                        return fail(
                            row.step,
                            format!("object {obj} holds {} bits, more than 2D", fmt(bits)),
                        );
                    }
                    if let Some(c) = adaptive {
                        let limit = chunk * (c + 1);
                        if bits > limit {
                            return fail(
                                row.step,
                                format!(
                                    "object {obj} holds {} bits, more than (c+1)·D/k = {}",
                                    fmt(bits),
                                    fmt(limit)
                                ),
                            );
                        }
                    }
                }
            }
            Protocol::Strawman => {
                if prev_total.is_some_and(|p| total < p) {
                    return fail(row.step, format!("storage shrank to {} bits", fmt(total)));
                }
            }
        }
        if row.attributed_chunks < u64::from(row.c_plus) {
            return fail(
                row.step,
                format!(
                    "{} bits attributed to writes but |C+| = {}",
                    fmt(trace.attributed_bits(row)),
                    row.c_plus
                ),
            );
        }
        if config.policy == Policy::AdversaryAd
            && row.f_members.len() <= m.f
            && row.writes_returned > 0
        {
            return fail(
                row.step,
                format!(
                    "a write returned while only {} objects hold a full value",
                    row.f_members.len()
                ),
            );
        }
        prev_total = Some(total);
    }

    if m.protocol == Protocol::Regular {
        let quiescent = m.end == crate::types::RunEnd::Quiescent && m.outstanding_writes == 0;
        match trace.rows.last() {
            Some(last) if quiescent => {
                let live = trace.live_bits(last);
                let want = chunk * m.live_objects() as u64;
                let ok = match config.links {
                    Links::Fifo => live == want,
                    Links::Unordered => live <= want,
                };
                if !ok {
                    return fail(
                        last.step,
                        format!(
                            "quiescent storage {} bits on live objects, expected {}",
                            fmt(live),
                            fmt(want)
                        ),
                    );
                }
                notes.push(format!(
                    "quiescent storage {} bits on {} live objects",
                    fmt(live),
                    m.live_objects()
                ));
            }
            _ => notes.push("run not quiescent: final storage not checked".to_string()),
        }
    }
    let mut r = CheckReport::pass(P, CheckMode::Witness);
    r.notes = notes;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::Verdict;
    use crate::sim::{StorageRow, TraceMeta};
    use crate::types::RunEnd;

    fn trace(protocol: Protocol, rows: &[[u32; 4]]) -> StorageTrace {
        StorageTrace {
            meta: TraceMeta {
                protocol,
                n: 4,
                f: 1,
                k: 2,
                d_bits: 1024,
                end: RunEnd::Quiescent,
                crashed_objects: vec![],
                outstanding_writes: 0,
                notes: vec![],
            },
            rows: rows
                .iter()
                .enumerate()
                .map(|(i, c)| StorageRow {
                    step: i as u64,
                    chunks: c.to_vec(),
                    c: 0,
                    c_plus: 0,
                    c_minus: 0,
                    f_members: vec![],
                    attributed_chunks: 0,
                    writes_returned: 0,
                })
                .collect(),
        }
    }

    fn config(p: Protocol) -> Config {
        Config::new(p, 4, 1, 2)
    }

    #[test]
    fn safe_storage_is_constant() {
        let t = trace(Protocol::Safe, &[[1; 4], [1; 4]]);
        assert_eq!(
            check_storage_bounds(&t, &config(Protocol::Safe), 1).verdict,
            Verdict::Pass
        );
        let t = trace(Protocol::Safe, &[[1; 4], [1, 2, 1, 1]]);
        let r = check_storage_bounds(&t, &config(Protocol::Safe), 1);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witness.unwrap().step, Some(1));
    }

    #[test]
    fn regular_bounds() {
        let cfg = config(Protocol::Regular);
        // k = 2: the adaptive bound needs c = 0, which only the quiescent state meets.
        let t = trace(
            Protocol::Regular,
            &[[1; 4], [2, 2, 1, 1], [4, 4, 4, 4], [1; 4]],
        );
        assert_eq!(check_storage_bounds(&t, &cfg, 3).verdict, Verdict::Pass);
        let t = trace(Protocol::Regular, &[[1; 4], [5, 1, 1, 1], [1; 4]]);
        assert_eq!(check_storage_bounds(&t, &cfg, 3).verdict, Verdict::Fail);
        let t = trace(Protocol::Regular, &[[1; 4], [2, 1, 1, 1], [1; 4]]);
        assert_eq!(check_storage_bounds(&t, &cfg, 0).verdict, Verdict::Fail);
        let t = trace(Protocol::Regular, &[[1; 4], [2, 1, 1, 1]]);
        let r = check_storage_bounds(&t, &cfg, 3);
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.witness.unwrap().detail.contains("quiescent"));
    }

    #[test]
    fn unordered_links_allow_a_missing_final_chunk() {
        let mut cfg = config(Protocol::Regular);
        let t = trace(Protocol::Regular, &[[1; 4], [0, 1, 1, 1]]);
        assert_eq!(check_storage_bounds(&t, &cfg, 1).verdict, Verdict::Fail);
        cfg.links = Links::Unordered;
        assert_eq!(check_storage_bounds(&t, &cfg, 1).verdict, Verdict::Pass);
    }

    #[test]
    fn strawman_storage_never_shrinks() {
        let cfg = config(Protocol::Strawman);
        let t = trace(Protocol::Strawman, &[[1; 4], [2, 1, 1, 1], [2, 2, 1, 1]]);
        assert_eq!(check_storage_bounds(&t, &cfg, 2).verdict, Verdict::Pass);
        let t = trace(Protocol::Strawman, &[[1; 4], [2, 1, 1, 1], [1; 4]]);
        assert_eq!(check_storage_bounds(&t, &cfg, 2).verdict, Verdict::Fail);
    }

    #[test]
    fn writes_returning_under_the_adversary_need_f_plus_one_full_objects() {
        let mut cfg = config(Protocol::Strawman);
        cfg.policy = Policy::AdversaryAd;
        let mut t = trace(Protocol::Strawman, &[[1; 4], [2, 1, 1, 1]]);
        t.rows[1].writes_returned = 1;
        t.rows[1].f_members = vec![1];
        assert_eq!(check_storage_bounds(&t, &cfg, 1).verdict, Verdict::Fail);
        t.rows[1].f_members = vec![1, 2];
        assert_eq!(check_storage_bounds(&t, &cfg, 1).verdict, Verdict::Pass);
    }
}
