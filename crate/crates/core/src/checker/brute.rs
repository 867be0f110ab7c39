//! Brute-force oracle: searches linearizations directly, comparing values.
//!
//! It knows nothing about timestamps or sources, so it serves as an
//! independent reference for the witness-mode checks on small histories.
//! Searches over more than [`MAX_WRITES`] writes are not attempted.

use std::collections::BTreeSet;

use super::{CheckMode, CheckReport, Witness};
use crate::codec::Value;
use crate::types::{precedes, History, OperationRecord};

pub const MAX_WRITES: usize = 8;

const MODE: CheckMode = CheckMode::BruteForce;

/// Calls `visit` on every ordering of `0..n` that respects `before`, until it returns true.
fn linear_extensions(
    n: usize,
    before: &dyn Fn(usize, usize) -> bool,
    visit: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    fn go(
        n: usize,
        before: &dyn Fn(usize, usize) -> bool,
        order: &mut Vec<usize>,
        used: &mut Vec<bool>,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) -> bool {
        if order.len() == n {
            return visit(order);
        }
        for e in 0..n {
            if used[e] || (0..n).any(|p| !used[p] && p != e && before(p, e)) {
                continue;
            }
            used[e] = true;
            order.push(e);
            let stop = go(n, before, order, used, visit);
            order.pop();
            used[e] = false;
            if stop {
                return true;
            }
        }
        false
    }
    go(
        n,
        before,
        &mut Vec::with_capacity(n),
        &mut vec![false; n],
        visit,
    )
}

struct Small<'h> {
    initial: &'h Value,
    writes: Vec<&'h OperationRecord>,
    reads: Vec<&'h OperationRecord>,
}

impl<'h> Small<'h> {
    fn new(h: &'h History) -> Self {
        Self {
            initial: &h.initial,
            writes: h.writes().collect(),
            reads: h.reads().filter(|r| r.returned()).collect(),
        }
    }

    fn too_big(&self, property: &str) -> Option<CheckReport> {
        (self.writes.len() > MAX_WRITES).then(|| {
            CheckReport::inconclusive(
                property,
                MODE,
                format!(
                    "{} writes exceed the brute-force budget of {MAX_WRITES}",
                    self.writes.len()
                ),
            )
        })
    }

    /// Value read right after the first `p` writes of `order`.
    fn value_at(&self, order: &[usize], p: usize) -> &Value {
        if p == 0 {
            self.initial
        } else {
            self.writes[order[p - 1]]
                .value
                .as_ref()
                .expect("write has a value")
        }
    }

    /// Projections onto rel-writes of the linearizations of all writes plus
    /// `rd` that return `rd`'s value. Element `w` of the projection is a
    /// write index; the read itself is left out.
    fn read_orders(&self, rd: &OperationRecord) -> BTreeSet<Vec<usize>> {
        let n = self.writes.len();
        // Element n stands for the read.
        let before = |a: usize, b: usize| match (a == n, b == n) {
            (true, true) => false,
            (true, false) => precedes(rd, self.writes[b]),
            (false, true) => precedes(self.writes[a], rd),
            (false, false) => precedes(self.writes[a], self.writes[b]),
        };
        let mut found = BTreeSet::new();
        let want = rd.value.as_ref();
        linear_extensions(n + 1, &before, &mut |order| {
            let p = order
                .iter()
                .position(|&e| e == n)
                .expect("read is in the order");
            let writes: Vec<usize> = order.iter().copied().filter(|&e| e != n).collect();
            if Some(self.value_at(&writes, p)) == want {
                found.insert(
                    writes
                        .into_iter()
                        .filter(|&w| !precedes(rd, self.writes[w]))
                        .collect(),
                );
            }
            false
        });
        found
    }
}

pub fn weak_regularity(h: &History) -> CheckReport {
    const P: &str = "weak-regularity";
    let s = Small::new(h);
    if let Some(r) = s.too_big(P) {
        return r;
    }
    for rd in &s.reads {
        if s.read_orders(rd).is_empty() {
            return CheckReport::fail(
                P,
                MODE,
                Witness::ops(vec![rd.id], "no linearization of the writes and this read"),
            );
        }
    }
    CheckReport::pass(P, MODE)
}

/// Whether two projected orders agree on the writes they share.
fn agree(a: &[usize], b: &[usize]) -> bool {
    let in_b: BTreeSet<usize> = b.iter().copied().collect();
    let in_a: BTreeSet<usize> = a.iter().copied().collect();
    a.iter()
        .filter(|w| in_b.contains(w))
        .eq(b.iter().filter(|w| in_a.contains(w)))
}

pub fn strong_regularity(h: &History) -> CheckReport {
    const P: &str = "strong-regularity";
    let s = Small::new(h);
    if let Some(r) = s.too_big(P) {
        return r;
    }
    let mut options: Vec<Vec<Vec<usize>>> = Vec::new();
    for rd in &s.reads {
        let o = s.read_orders(rd);
        if o.is_empty() {
            return CheckReport::fail(
                P,
                MODE,
                Witness::ops(vec![rd.id], "no linearization of the writes and this read"),
            );
        }
        options.push(o.into_iter().collect());
    }
    fn pick(options: &[Vec<Vec<usize>>], chosen: &mut Vec<usize>) -> bool {
        let i = chosen.len();
        if i == options.len() {
            return true;
        }
        for (j, cand) in options[i].iter().enumerate() {
            if chosen
                .iter()
                .enumerate()
                .all(|(r, &c)| agree(&options[r][c], cand))
            {
                chosen.push(j);
                if pick(options, chosen) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }
    if pick(&options, &mut Vec::new()) {
        CheckReport::pass(P, MODE)
    } else {
        let ids = s.reads.iter().map(|r| r.id).collect();
        CheckReport::fail(
            P,
            MODE,
            Witness::ops(ids, "the reads admit no pairwise agreeing write orders"),
        )
    }
}

pub fn strongly_safe(h: &History) -> CheckReport {
    const P: &str = "strongly-safe";
    let s = Small::new(h);
    if let Some(r) = s.too_big(P) {
        return r;
    }
    let quiet: Vec<&OperationRecord> = s
        .reads
        .iter()
        .copied()
        .filter(|rd| s.writes.iter().all(|w| precedes(w, rd) || precedes(rd, w)))
        .collect();
    let n = s.writes.len();
    let before = |a: usize, b: usize| precedes(s.writes[a], s.writes[b]);
    let fits = |order: &[usize], rd: &OperationRecord| {
        (0..=n).any(|p| {
            order[..p].iter().all(|&w| !precedes(rd, s.writes[w]))
                && order[p..].iter().all(|&w| !precedes(s.writes[w], rd))
                && Some(s.value_at(order, p)) == rd.value.as_ref()
        })
    };
    let ok = linear_extensions(n, &before, &mut |order| {
        quiet.iter().all(|rd| fits(order, rd))
    });
    if ok {
        CheckReport::pass(P, MODE)
    } else {
        let ids = quiet.iter().map(|r| r.id).collect();
        CheckReport::fail(
            P,
            MODE,
            Witness::ops(
                ids,
                "no write order serves every read without concurrent writes",
            ),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::hist;
    use super::*;

    #[test]
    fn counts_linear_extensions() {
        let mut count = 0;
        linear_extensions(4, &|_, _| false, &mut |_| {
            count += 1;
            false
        });
        assert_eq!(count, 24);
        let mut count = 0;
        linear_extensions(4, &|a, b| a + 1 == b, &mut |o| {
            assert_eq!(o, &[0, 1, 2, 3]);
            count += 1;
            false
        });
        assert_eq!(count, 1);
    }

    #[test]
    fn budget_is_enforced() {
        let ops: Vec<_> = (0..9)
            .map(|i| ('w', i as u8 + 1, 2 * i + 1, Some(2 * i + 2)))
            .collect();
        let h = hist(&ops);
        assert_eq!(
            weak_regularity(&h).verdict,
            super::super::Verdict::Inconclusive
        );
    }

    #[test]
    fn agreement_on_shared_writes() {
        assert!(agree(&[1, 2, 3], &[2, 3]));
        assert!(agree(&[1, 2], &[3, 1, 2]));
        assert!(!agree(&[1, 2], &[2, 1]));
    }
}
