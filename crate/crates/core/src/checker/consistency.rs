//! Witness-mode consistency checks.
//!
//! Each returned read is matched to the write it read from, its source. A
//! read returning the initial value reads from the fictional initial write
//! `w0`, which precedes every operation. Sources are found by value; when a
//! read also carries a timestamp that picks out one of the matching writes,
//! that write is used.
//!
//! Weak regularity holds for a read exactly when its source is not invoked
//! after the read returns and no write sits strictly between the source and
//! the read in the precedence order.
//!
//! Strong regularity additionally needs the per-read write orders to agree on
//! shared relevant writes. Relevant-write sets are nested (a write is relevant
//! to a read iff it is invoked before the read returns), so the per-read orders
//! agree iff one global write order serves every read. Such an order exists
//! iff the graph with the precedence edges between writes plus an edge
//! `x -> source(rd)` for every write `x ≺ rd` is acyclic.

use std::collections::BTreeMap;

use super::{brute, validate_history, CheckMode, CheckReport, Witness};
use crate::codec::Value;
use crate::types::{precedes, History, OperationRecord, TimeStamp};

const STRONGLY_SAFE: &str = "strongly-safe";
const WEAK: &str = "weak-regularity";
const STRONG: &str = "strong-regularity";

/// Above this many source combinations for ambiguous reads, witness mode gives up.
const MAX_SOURCE_COMBINATIONS: usize = 1 << 12;

/// Node 0 is the initial write, node `i + 1` is `writes[i]`.
pub(super) struct Model<'h> {
    h: &'h History,
    writes: Vec<&'h OperationRecord>,
    /// Returned reads.
    reads: Vec<&'h OperationRecord>,
    /// Writes sorted by return time, with the running maximum invocation time.
    by_return: Vec<(u64, u64)>,
}

impl<'h> Model<'h> {
    pub(super) fn new(h: &'h History) -> Self {
        let writes: Vec<_> = h.writes().collect();
        let reads: Vec<_> = h.reads().filter(|r| r.returned()).collect();
        let mut by_return: Vec<(u64, u64)> = writes
            .iter()
            .filter_map(|w| w.return_time.map(|r| (r, w.invoke_time)))
            .collect();
        by_return.sort_unstable();
        let mut max_inv = 0;
        for e in by_return.iter_mut() {
            max_inv = max_inv.max(e.1);
            e.1 = max_inv;
        }
        Self {
            h,
            writes,
            reads,
            by_return,
        }
    }

    fn nodes(&self) -> usize {
        self.writes.len() + 1
    }

    fn value(&self, node: usize) -> &Value {
        if node == 0 {
            &self.h.initial
        } else {
            self.writes[node - 1].value.as_ref().expect("validated")
        }
    }

    fn label(&self, node: usize) -> String {
        if node == 0 {
            "w0".to_string()
        } else {
            format!("#{}", self.writes[node - 1].id)
        }
    }

    fn op_id(&self, node: usize) -> Option<usize> {
        (node != 0).then(|| self.writes[node - 1].id)
    }

    fn write_precedes(&self, a: usize, b: usize) -> bool {
        match (a, b) {
            (_, 0) => false,
            (0, _) => true,
            _ => precedes(self.writes[a - 1], self.writes[b - 1]),
        }
    }

    fn write_precedes_read(&self, a: usize, rd: &OperationRecord) -> bool {
        a == 0 || precedes(self.writes[a - 1], rd)
    }

    fn read_precedes_write(&self, rd: &OperationRecord, a: usize) -> bool {
        a != 0 && precedes(rd, self.writes[a - 1])
    }

    /// Whether some write lies strictly between `source` and `rd`.
    fn overwritten_before(&self, source: usize, rd: &OperationRecord) -> bool {
        // Latest invocation among writes that returned before rd was invoked.
        let idx = self.by_return.partition_point(|&(r, _)| r < rd.invoke_time);
        if idx == 0 {
            return false;
        }
        let latest_inv = self.by_return[idx - 1].1;
        match source {
            0 => true,
            s => matches!(self.writes[s - 1].return_time, Some(r) if r < latest_inv),
        }
    }

    /// Writes (as nodes) whose value `rd` returned and that `rd` does not precede.
    fn sources(&self, rd: &OperationRecord) -> Result<Vec<usize>, Witness> {
        let v = rd.value.as_ref().expect("returned read has a value");
        let by_value: Vec<usize> = (0..self.nodes()).filter(|&a| self.value(a) == v).collect();
        if by_value.is_empty() {
            return Err(Witness::ops(
                vec![rd.id],
                format!("read returns {v:?}, which was never written"),
            ));
        }
        let allowed: Vec<usize> = by_value
            .iter()
            .copied()
            .filter(|&a| !self.read_precedes_write(rd, a))
            .collect();
        if allowed.is_empty() {
            let mut ops = vec![rd.id];
            ops.extend(by_value.iter().filter_map(|&a| self.op_id(a)));
            return Err(Witness::ops(
                ops,
                "read returns a value written only after it returned",
            ));
        }
        if let Some(ts) = rd.ts {
            let tagged: Vec<usize> = allowed
                .iter()
                .copied()
                .filter(|&a| {
                    if a == 0 {
                        ts == TimeStamp::ZERO
                    } else {
                        self.writes[a - 1].ts == Some(ts)
                    }
                })
                .collect();
            if !tagged.is_empty() {
                return Ok(tagged);
            }
        }
        Ok(allowed)
    }

    /// Sources of `rd` satisfying the single-read regularity condition.
    fn regular_sources(&self, rd: &OperationRecord) -> Result<Vec<usize>, Witness> {
        let sources = self.sources(rd)?;
        let ok: Vec<usize> = sources
            .iter()
            .copied()
            .filter(|&s| !self.overwritten_before(s, rd))
            .collect();
        if ok.is_empty() {
            let s = sources[0];
            let between = self
                .writes
                .iter()
                .enumerate()
                .find(|&(i, x)| self.write_precedes(s, i + 1) && precedes(x, rd))
                .map(|(_, x)| x.id);
            let mut ops = vec![rd.id];
            ops.extend(self.op_id(s));
            ops.extend(between);
            let detail = format!(
                "stale read: returns the value of {} but {} was written in between",
                self.label(s),
                between.map_or("another write".to_string(), |b| format!("#{b}"))
            );
            return Err(Witness::ops(ops, detail));
        }
        Ok(ok)
    }

    fn is_quiet(&self, rd: &OperationRecord) -> bool {
        self.writes
            .iter()
            .all(|w| precedes(w, rd) || precedes(rd, w))
    }
}

/// Edges of the write-order graph; each forced edge remembers the read that forced it.
struct Graph {
    adj: Vec<Vec<(usize, Option<usize>)>>,
}

impl Graph {
    fn with_precedence(m: &Model<'_>) -> Self {
        let n = m.nodes();
        let mut adj = vec![Vec::new(); n];
        for (a, out) in adj.iter_mut().enumerate() {
            for b in 1..n {
                if a != b && m.write_precedes(a, b) {
                    out.push((b, None));
                }
            }
        }
        Self { adj }
    }

    /// `x -> source` for every write `x ≺ rd` other than the source.
    fn force(&mut self, m: &Model<'_>, rd: &OperationRecord, source: usize) {
        for x in 1..m.nodes() {
            if x != source && precedes(m.writes[x - 1], rd) {
                self.adj[x].push((source, Some(rd.id)));
            }
        }
    }

    /// A cycle, as (node, edge label into the next node) pairs, if one exists.
    fn find_cycle(&self) -> Option<Vec<(usize, Option<usize>)>> {
        let n = self.adj.len();
        let mut indeg = vec![0usize; n];
        let mut preds: Vec<Vec<(usize, Option<usize>)>> = vec![Vec::new(); n];
        for (a, edges) in self.adj.iter().enumerate() {
            for &(b, label) in edges {
                indeg[b] += 1;
                preds[b].push((a, label));
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut removed = vec![false; n];
        while let Some(v) = stack.pop() {
            removed[v] = true;
            for &(b, _) in &self.adj[v] {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    stack.push(b);
                }
            }
        }
        // Every node Kahn's pass left behind has a predecessor that was left
        // behind too; walking predecessors must eventually repeat a node.
        let mut v = (0..n).find(|&v| !removed[v])?;
        let mut pos: BTreeMap<usize, usize> = BTreeMap::new();
        let mut back: Vec<(usize, Option<usize>)> = Vec::new();
        loop {
            if let Some(&i) = pos.get(&v) {
                // back[j] = (node, label of the edge from its predecessor into it)
                let mut cyc: Vec<(usize, Option<usize>)> = back.split_off(i);
                cyc.reverse();
                // Re-key labels to the outgoing edge of each node.
                let len = cyc.len();
                let labels: Vec<Option<usize>> = cyc.iter().map(|&(_, l)| l).collect();
                for j in 0..len {
                    cyc[j].1 = labels[(j + 1) % len];
                }
                return Some(cyc);
            }
            let &(p, label) = preds[v]
                .iter()
                .find(|&&(p, _)| !removed[p])
                .expect("remaining predecessor");
            pos.insert(v, back.len());
            back.push((v, label));
            v = p;
        }
    }
}

fn cycle_witness(m: &Model<'_>, cycle: &[(usize, Option<usize>)]) -> Witness {
    let mut reads: Vec<usize> = cycle.iter().filter_map(|&(_, l)| l).collect();
    reads.sort_unstable();
    reads.dedup();
    let mut ops = reads.clone();
    ops.extend(cycle.iter().filter_map(|&(v, _)| m.op_id(v)));
    let mut names: Vec<String> = cycle.iter().map(|&(v, _)| m.label(v)).collect();
    names.push(m.label(cycle[0].0));
    let forced: Vec<String> = reads.iter().map(|r| format!("#{r}")).collect();
    Witness::ops(
        ops,
        format!(
            "no common write order: cycle {} forced by reads {}",
            names.join(" -> "),
            forced.join(",")
        ),
    )
}

fn malformed(property: &str, mode: CheckMode, w: Witness) -> CheckReport {
    let mut w = w;
    w.detail = format!("malformed history: {}", w.detail);
    CheckReport::fail(property, mode, w)
}

/// Checks for every returned read that some linearization of all writes and
/// the read respects precedence and returns the latest written value.
pub fn check_weak_regularity(h: &History, mode: CheckMode) -> CheckReport {
    if let Err(w) = validate_history(h) {
        return malformed(WEAK, mode, w);
    }
    if mode == CheckMode::BruteForce {
        return brute::weak_regularity(h);
    }
    let m = Model::new(h);
    for rd in &m.reads {
        if let Err(w) = m.regular_sources(rd) {
            return CheckReport::fail(WEAK, mode, w);
        }
    }
    CheckReport::pass(WEAK, mode)
}

/// Tries every combination of the candidate sources; `build` adds the forced
/// edges for one read and returns false if the read cannot use that source.
fn search_orders(
    m: &Model<'_>,
    reads: &[(&OperationRecord, Vec<usize>)],
    property: &str,
) -> CheckReport {
    let combos = reads.iter().try_fold(1usize, |acc, (_, s)| {
        acc.checked_mul(s.len())
            .filter(|&c| c <= MAX_SOURCE_COMBINATIONS)
    });
    let Some(combos) = combos else {
        return CheckReport::inconclusive(
            property,
            CheckMode::Witness,
            "too many reads with ambiguous values to try every source",
        );
    };
    let mut first_cycle = None;
    for mut c in 0..combos {
        let mut g = Graph::with_precedence(m);
        for (rd, sources) in reads {
            let s = sources[c % sources.len()];
            c /= sources.len();
            g.force(m, rd, s);
        }
        match g.find_cycle() {
            None => return CheckReport::pass(property, CheckMode::Witness),
            Some(cycle) if first_cycle.is_none() => first_cycle = Some(cycle),
            Some(_) => {}
        }
    }
    let cycle = first_cycle.expect("at least one combination");
    CheckReport::fail(property, CheckMode::Witness, cycle_witness(m, &cycle))
}

/// Weak regularity plus agreement of the per-read write orders on every pair
/// of writes relevant to both reads.
pub fn check_strong_regularity(h: &History, mode: CheckMode) -> CheckReport {
    let weak = check_weak_regularity(h, mode);
    if weak.verdict != super::Verdict::Pass {
        let mut r = weak;
        r.property = STRONG.to_string();
        return r;
    }
    if mode == CheckMode::BruteForce {
        return brute::strong_regularity(h);
    }
    let m = Model::new(h);
    let mut reads = Vec::with_capacity(m.reads.len());
    for rd in &m.reads {
        match m.regular_sources(rd) {
            Ok(s) => reads.push((*rd, s)),
            Err(w) => return CheckReport::fail(STRONG, mode, w),
        }
    }
    search_orders(&m, &reads, STRONG)
}

/// One write order must exist such that every read with no concurrent write
/// returns the value of the last write preceding it in that order. Reads that
/// overlap a write, including one that never returns, may return anything.
pub fn check_strongly_safe(h: &History, mode: CheckMode) -> CheckReport {
    if let Err(w) = validate_history(h) {
        return malformed(STRONGLY_SAFE, mode, w);
    }
    if mode == CheckMode::BruteForce {
        return brute::strongly_safe(h);
    }
    let m = Model::new(h);
    let mut reads = Vec::new();
    for rd in m.reads.iter().filter(|rd| m.is_quiet(rd)) {
        let sources = match m.sources(rd) {
            Ok(s) => s,
            Err(w) => return CheckReport::fail(STRONGLY_SAFE, mode, w),
        };
        let before: Vec<usize> = sources
            .into_iter()
            .filter(|&s| m.write_precedes_read(s, rd))
            .collect();
        if before.is_empty() {
            return CheckReport::fail(
                STRONGLY_SAFE,
                mode,
                Witness::ops(
                    vec![rd.id],
                    "read with no concurrent write returns a value no preceding write wrote",
                ),
            );
        }
        reads.push((*rd, before));
    }
    search_orders(&m, &reads, STRONGLY_SAFE)
}
