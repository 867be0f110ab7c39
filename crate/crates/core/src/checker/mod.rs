//! Offline checks over recorded histories and storage traces.
//!
//! Consistency checks come in two modes. Witness mode reduces each property
//! to a graph problem over the writes and scales to long histories. Brute-force
//! mode searches linearizations directly by value and is used as an oracle on
//! small histories.

pub mod brute;
mod consistency;
mod liveness;
mod storage_audit;

use std::fmt;

use serde::Serialize;

use crate::types::{precedes, History, OperationRecord};

pub use consistency::{check_strong_regularity, check_strongly_safe, check_weak_regularity};
pub use liveness::{check_liveness, LivenessMode};
pub use storage_audit::check_storage_bounds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    /// Neither outcome could be established, e.g. a run cut off while still progressing.
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    Witness,
    BruteForce,
}

impl fmt::Display for CheckMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckMode::Witness => "witness",
            CheckMode::BruteForce => "brute-force",
        })
    }
}

/// Evidence for a failed check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    /// Operation ids involved, reads first.
    pub ops: Vec<usize>,
    /// Trace step, for storage violations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<u64>,
    pub detail: String,
}

impl Witness {
    pub fn ops(ops: Vec<usize>, detail: impl Into<String>) -> Self {
        Self {
            ops,
            step: None,
            detail: detail.into(),
        }
    }

    pub fn step(step: u64, detail: impl Into<String>) -> Self {
        Self {
            ops: Vec::new(),
            step: Some(step),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(s) = self.step {
            write!(f, "step {s}: ")?;
        }
        if !self.ops.is_empty() {
            let ids: Vec<String> = self.ops.iter().map(|i| format!("#{i}")).collect();
            write!(f, "ops {}: ", ids.join(","))?;
        }
        f.write_str(&self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub property: String,
    pub verdict: Verdict,
    pub mode: CheckMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn pass(property: impl Into<String>, mode: CheckMode) -> Self {
        Self {
            property: property.into(),
            verdict: Verdict::Pass,
            mode,
            witness: None,
            notes: Vec::new(),
        }
    }

    pub fn fail(property: impl Into<String>, mode: CheckMode, witness: Witness) -> Self {
        Self {
            property: property.into(),
            verdict: Verdict::Fail,
            mode,
            witness: Some(witness),
            notes: Vec::new(),
        }
    }

    pub fn inconclusive(
        property: impl Into<String>,
        mode: CheckMode,
        note: impl Into<String>,
    ) -> Self {
        Self {
            property: property.into(),
            verdict: Verdict::Inconclusive,
            mode,
            witness: None,
            notes: vec![note.into()],
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} ({})", self.property, self.verdict, self.mode)?;
        if let Some(w) = &self.witness {
            write!(f, " witness {w}")?;
        }
        for n in &self.notes {
            write!(f, "; {n}")?;
        }
        Ok(())
    }
}

/// Writes whose invocation does not follow the read's return: `rd ⊀ w`.
/// The fictional initial write is not included.
pub fn rel_writes<'h>(h: &'h History, rd: &OperationRecord) -> Vec<&'h OperationRecord> {
    h.writes().filter(|w| !precedes(rd, w)).collect()
}

/// Maximum number of simultaneously outstanding writes. A write that never
/// returns stays outstanding to the end of the history.
pub fn max_write_concurrency(h: &History) -> usize {
    let mut events: Vec<(u64, i32)> = Vec::new();
    for w in h.writes() {
        events.push((w.invoke_time, 1));
        if let Some(r) = w.return_time {
            // Outstanding through the return step itself.
            events.push((r + 1, -1));
        }
    }
    events.sort_by_key(|&(t, d)| (t, d));
    let (mut cur, mut max) = (0i32, 0i32);
    for (_, d) in events {
        cur += d;
        max = max.max(cur);
    }
    max as usize
}

/// Structural problems that make a history unusable for checking.
pub fn validate_history(h: &History) -> Result<(), Witness> {
    let mut seen = std::collections::BTreeSet::new();
    for op in &h.ops {
        if !seen.insert(op.id) {
            return Err(Witness::ops(vec![op.id], "duplicate operation id"));
        }
        if op.return_time.is_some_and(|r| r <= op.invoke_time) {
            return Err(Witness::ops(
                vec![op.id],
                "returns no later than it is invoked",
            ));
        }
        if op.is_write() && op.value.is_none() {
            return Err(Witness::ops(vec![op.id], "write without a value"));
        }
        if op.is_read() && op.returned() && op.value.is_none() {
            return Err(Witness::ops(vec![op.id], "returned read without a value"));
        }
    }
    let mut per_client: std::collections::BTreeMap<_, Vec<&OperationRecord>> = Default::default();
    for op in &h.ops {
        per_client.entry(op.client).or_default().push(op);
    }
    for ops in per_client.values_mut() {
        ops.sort_by_key(|o| o.invoke_time);
        for pair in ops.windows(2) {
            if !precedes(pair[0], pair[1]) {
                return Err(Witness::ops(
                    vec![pair[0].id, pair[1].id],
                    "one client has two operations outstanding at once",
                ));
            }
        }
    }
    Ok(())
}
