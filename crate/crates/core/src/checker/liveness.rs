//! Termination checks.

use super::{CheckMode, CheckReport, Verdict, Witness};
use crate::types::{History, OperationRecord, RunEnd};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LivenessMode {
    /// Every operation of a correct client returns.
    WaitFree,
    /// Every write of a correct client returns, and reads return once writes stop.
    FwTerminating,
}

impl LivenessMode {
    fn property(self) -> &'static str {
        match self {
            LivenessMode::WaitFree => "liveness(wait-free)",
            LivenessMode::FwTerminating => "liveness(fw-terminating)",
        }
    }
}

/// Writes invoked while `rd` was running, up to `until`.
fn writes_during(h: &History, rd: &OperationRecord, until: u64) -> usize {
    h.writes()
        .filter(|w| w.invoke_time >= rd.invoke_time && w.invoke_time <= until)
        .count()
}

/// Checks that operations of correct clients terminate.
///
/// An operation still running when the step limit cut the run short is
/// reported as inconclusive rather than failed. A read that exhausted its
/// round budget fails wait-freedom; under FW-termination it is accepted, with
/// a note, if writes kept being invoked while it ran.
pub fn check_liveness(h: &History, mode: LivenessMode) -> CheckReport {
    let property = mode.property();
    let mode_tag = CheckMode::Witness;
    let mut verdict = Verdict::Pass;
    let mut witness = None;
    let mut notes = Vec::new();
    let fail = |w: Witness, witness: &mut Option<Witness>, verdict: &mut Verdict| {
        *verdict = Verdict::Fail;
        witness.get_or_insert(w);
    };
    for op in h.ops.iter().filter(|o| h.is_correct(o.client)) {
        if op.returned() {
            continue;
        }
        if let Some(step) = op.gave_up {
            let overlapping = writes_during(h, op, step);
            if mode == LivenessMode::FwTerminating && overlapping > 0 {
                notes.push(format!(
                    "read #{} stopped at step {step} after {} rounds while {overlapping} writes were invoked; \
                     reads need not finish while writes continue",
                    op.id, op.rounds
                ));
            } else {
                let detail = if overlapping > 0 {
                    format!(
                        "read stopped after {} rounds while {overlapping} writes were invoked",
                        op.rounds
                    )
                } else {
                    format!(
                        "read stopped after {} rounds with no write invoked meanwhile",
                        op.rounds
                    )
                };
                fail(
                    Witness::ops(vec![op.id], detail),
                    &mut witness,
                    &mut verdict,
                );
            }
            continue;
        }
        match h.end {
            RunEnd::Truncated => {
                if verdict == Verdict::Pass {
                    verdict = Verdict::Inconclusive;
                }
                notes.push(format!(
                    "{} #{} still running when the step limit was reached",
                    op.kind, op.id
                ));
            }
            RunEnd::Stalled | RunEnd::Quiescent => fail(
                Witness::ops(
                    vec![op.id],
                    format!(
                        "{} of a correct client never returned ({} run)",
                        op.kind, h.end
                    ),
                ),
                &mut witness,
                &mut verdict,
            ),
        }
    }
    if notes.len() > 8 {
        let extra = notes.len() - 8;
        notes.truncate(8);
        notes.push(format!("{extra} more"));
    }
    CheckReport {
        property: property.to_string(),
        verdict,
        mode: mode_tag,
        witness,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::hist;
    use super::*;
    use crate::types::ClientId;

    #[test]
    fn complete_history_passes() {
        let h = hist(&[('w', 1, 1, Some(2)), ('r', 1, 3, Some(4))]);
        assert_eq!(
            check_liveness(&h, LivenessMode::WaitFree).verdict,
            Verdict::Pass
        );
    }

    #[test]
    fn crashed_clients_are_exempt() {
        let mut h = hist(&[('w', 1, 1, None), ('r', 0, 3, Some(4))]);
        h.crashed_clients.insert(ClientId(1));
        assert_eq!(
            check_liveness(&h, LivenessMode::WaitFree).verdict,
            Verdict::Pass
        );
        h.crashed_clients.clear();
        let r = check_liveness(&h, LivenessMode::WaitFree);
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witness.unwrap().ops, vec![0]);
    }

    #[test]
    fn truncated_runs_are_inconclusive() {
        let mut h = hist(&[('w', 1, 1, None)]);
        h.end = RunEnd::Truncated;
        assert_eq!(
            check_liveness(&h, LivenessMode::WaitFree).verdict,
            Verdict::Inconclusive
        );
        h.end = RunEnd::Stalled;
        assert_eq!(
            check_liveness(&h, LivenessMode::WaitFree).verdict,
            Verdict::Fail
        );
    }

    #[test]
    fn starved_read_is_expected_only_under_fw_termination() {
        let mut h = hist(&[
            ('r', 0, 1, None),
            ('w', 1, 2, Some(5)),
            ('w', 2, 6, Some(9)),
        ]);
        h.ops[0].gave_up = Some(10);
        h.ops[0].rounds = 4;
        let fw = check_liveness(&h, LivenessMode::FwTerminating);
        assert_eq!(fw.verdict, Verdict::Pass);
        assert_eq!(fw.notes.len(), 1);
        assert_eq!(
            check_liveness(&h, LivenessMode::WaitFree).verdict,
            Verdict::Fail
        );
        // Without writes in the way, giving up is a failure in either mode.
        let mut h = hist(&[('w', 1, 1, Some(2)), ('r', 0, 3, None)]);
        h.ops[1].gave_up = Some(20);
        assert_eq!(
            check_liveness(&h, LivenessMode::FwTerminating).verdict,
            Verdict::Fail
        );
    }
}
