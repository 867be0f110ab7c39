//! The checks applied to every run and every history given to `check`.

use ecreg::checker::{
    brute, check_liveness, check_storage_bounds, check_strong_regularity, check_strongly_safe,
    check_weak_regularity, max_write_concurrency, CheckMode, CheckReport, LivenessMode, Verdict,
};
use ecreg::sim::{Config, Policy, Protocol, StorageTrace};
use ecreg::types::History;

/// Runs the consistency, liveness and storage checks that apply to the
/// protocol and policy of `config`.
///
/// Consistency is checked in witness mode and, when the history is small
/// enough, again by brute force. Liveness is skipped for the adversary and
/// for scripted schedules, which are not fair by design.
pub fn audit(config: &Config, history: &History, trace: &StorageTrace) -> Vec<CheckReport> {
    let mut reports = Vec::new();
    let consistency: &[fn(&History, CheckMode) -> CheckReport] = match config.protocol {
        Protocol::Safe | Protocol::Strawman => &[check_strongly_safe],
        Protocol::Regular => &[check_weak_regularity, check_strong_regularity],
    };
    let small = history.writes().count() <= brute::MAX_WRITES;
    for check in consistency {
        reports.push(check(history, CheckMode::Witness));
        if small {
            reports.push(check(history, CheckMode::BruteForce));
        }
    }

    let fair = !matches!(
        config.policy,
        Policy::AdversaryAd
            | Policy::Scripted {
                after: ecreg::sim::AfterScript::Stop,
                ..
            }
    );
    if fair {
        let mode = match config.protocol {
            Protocol::Regular => LivenessMode::FwTerminating,
            Protocol::Safe | Protocol::Strawman => LivenessMode::WaitFree,
        };
        reports.push(check_liveness(history, mode));
    }

    let c = max_write_concurrency(history);
    reports.push(
        check_storage_bounds(trace, config, c).with_note(format!("observed write concurrency {c}")),
    );
    reports
}

pub fn failed(reports: &[CheckReport]) -> bool {
    reports.iter().any(|r| r.verdict == Verdict::Fail)
}

pub fn summary(reports: &[CheckReport]) -> String {
    let count = |v| reports.iter().filter(|r| r.verdict == v).count();
    format!(
        "summary: {} pass, {} fail, {} inconclusive",
        count(Verdict::Pass),
        count(Verdict::Fail),
        count(Verdict::Inconclusive)
    )
}
