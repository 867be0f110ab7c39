//! Named experiment scenarios and their command-line overrides.

use std::fmt;
use std::str::FromStr;

use ecreg::client::ClientProgram;
use ecreg::sim::{
    AfterScript, Component, Config, CrashSpec, Links, Policy, Protocol, ScriptedAction,
};
use ecreg::types::ClientId;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Safe register, n=4, f=1, k=2, a few writers and readers under a fair scheduler.
    SafeBasic,
    /// Regular register, n=6, f=1, k=4, writers in lockstep so concurrency stays at the writer count.
    RegularAdaptive,
    /// Regular register, n=6, f=1, k=4, more writers than the adaptive bound covers.
    RegularWorstcase,
    /// Append-only strawman under the adversary: storage grows with every writer.
    LowerboundDemo,
    /// Two writers store one piece each and crash, a third writer follows (n=4, f=1, k=2).
    Figure1,
    /// Four writers under the adversary, showing C, C⁺, C⁻ and F evolve.
    Figure2,
}

pub const ALL: [Scenario; 6] = [
    Scenario::SafeBasic,
    Scenario::RegularAdaptive,
    Scenario::RegularWorstcase,
    Scenario::LowerboundDemo,
    Scenario::Figure1,
    Scenario::Figure2,
];

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::SafeBasic => "safe-basic",
            Scenario::RegularAdaptive => "regular-adaptive",
            Scenario::RegularWorstcase => "regular-worstcase",
            Scenario::LowerboundDemo => "lowerbound-demo",
            Scenario::Figure1 => "figure1",
            Scenario::Figure2 => "figure2",
        }
    }

    /// Scenarios whose schedule is written out step by step.
    pub fn is_scripted(self) -> bool {
        self == Scenario::Figure1
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ALL.iter()
            .copied()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = ALL.iter().map(|s| s.name()).collect();
                format!(
                    "unknown scenario {s:?} (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

/// Values given on the command line that replace scenario defaults.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub n: Option<usize>,
    pub f: Option<usize>,
    pub k: Option<usize>,
    pub d_bits: Option<u64>,
    pub seed: Option<u64>,
    pub steps: Option<u64>,
    pub policy: Option<Policy>,
    pub links: Option<Links>,
    pub writers: Option<u32>,
    pub readers: Option<u32>,
    /// Operations per client.
    pub ops: Option<usize>,
    pub max_read_rounds: Option<u32>,
    pub crashes: Vec<CrashSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub overrides: Overrides,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SpecError {
    #[error("{scenario} replays a fixed schedule; --{flag} cannot change it")]
    FixedSchedule {
        scenario: Scenario,
        flag: &'static str,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

struct Defaults {
    protocol: Protocol,
    n: usize,
    f: usize,
    k: usize,
    policy: Policy,
    writers: u32,
    readers: u32,
    ops: usize,
    steps: u64,
}

fn defaults(s: Scenario) -> Defaults {
    let base = Defaults {
        protocol: Protocol::Safe,
        n: 4,
        f: 1,
        k: 2,
        policy: Policy::FairRandom,
        writers: 2,
        readers: 2,
        ops: 5,
        steps: ecreg::sim::DEFAULT_STEP_LIMIT,
    };
    match s {
        Scenario::SafeBasic => base,
        Scenario::RegularAdaptive => Defaults {
            protocol: Protocol::Regular,
            n: 6,
            k: 4,
            policy: Policy::Fifo,
            writers: 1,
            ..base
        },
        Scenario::RegularWorstcase => Defaults {
            protocol: Protocol::Regular,
            n: 6,
            k: 4,
            writers: 6,
            ..base
        },
        Scenario::LowerboundDemo => Defaults {
            protocol: Protocol::Strawman,
            policy: Policy::AdversaryAd,
            writers: 8,
            readers: 0,
            ops: 1,
            steps: 20_000,
            ..base
        },
        Scenario::Figure1 => Defaults {
            protocol: Protocol::Strawman,
            writers: 3,
            readers: 1,
            ops: 1,
            ..base
        },
        Scenario::Figure2 => Defaults {
            protocol: Protocol::Strawman,
            policy: Policy::AdversaryAd,
            writers: 4,
            readers: 0,
            ops: 1,
            steps: 20_000,
            ..base
        },
    }
}

/// The schedule of the two-crashed-writers example. Object 1 is down from
/// the start; c1's piece lands on object 2 and c2's on object 3, both
/// writers crash, then c3's piece lands on object 4. The rest runs oldest
/// first, including the RMWs the crashed writers had already triggered.
fn figure1_script() -> Vec<ScriptedAction> {
    let c = ClientId;
    let deliver = |client: u32, object: usize| ScriptedAction::Deliver {
        client: c(client),
        object,
    };
    let mut s = vec![ScriptedAction::Client(c(1)), ScriptedAction::Client(c(2))];
    for client in [1, 2] {
        s.extend((2..=4).map(|o| deliver(client, o)));
    }
    s.extend([
        ScriptedAction::Client(c(1)),
        ScriptedAction::Client(c(2)),
        deliver(1, 2),
        deliver(2, 3),
    ]);
    // Crashes of c1 and c2 take effect here.
    s.push(ScriptedAction::Client(c(3)));
    s.extend((2..=4).map(|o| deliver(3, o)));
    s.extend([ScriptedAction::Client(c(3)), deliver(3, 4)]);
    s
}

/// Step before which c1 and c2 crash in the scripted example.
pub const FIGURE1_CRASH_STEP: u64 = 13;

impl ExperimentSpec {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            overrides: Overrides::default(),
        }
    }

    pub fn to_config(&self) -> Result<Config, SpecError> {
        let d = defaults(self.scenario);
        let o = &self.overrides;
        if self.scenario.is_scripted() {
            let fixed = [
                ("n", o.n.is_some()),
                ("f", o.f.is_some()),
                ("k", o.k.is_some()),
                ("policy", o.policy.is_some()),
                ("writers", o.writers.is_some()),
                ("readers", o.readers.is_some()),
                ("ops", o.ops.is_some()),
                ("crash", !o.crashes.is_empty()),
            ];
            if let Some((flag, _)) = fixed.iter().find(|(_, set)| *set) {
                return Err(SpecError::FixedSchedule {
                    scenario: self.scenario,
                    flag,
                });
            }
        }
        let f = o.f.unwrap_or(d.f);
        let k = o.k.unwrap_or(d.k);
        // Changing f or k without n keeps n = 2f + k.
        let n = o.n.unwrap_or(if o.f.is_some() || o.k.is_some() {
            2 * f + k
        } else {
            d.n
        });
        let mut c = Config::new(d.protocol, n, f, k);
        c.seed = o.seed.unwrap_or(0);
        c.step_limit = o.steps.unwrap_or(d.steps);
        c.policy = o.policy.clone().unwrap_or(d.policy);
        c.links = o.links.unwrap_or(Links::Fifo);
        c.d_bits = o.d_bits.unwrap_or(1024);
        c.max_read_rounds = o.max_read_rounds;
        let writers = o.writers.unwrap_or(d.writers);
        let readers = o.readers.unwrap_or(d.readers);
        let ops = o.ops.unwrap_or(d.ops);
        c.clients = (1..=writers)
            .map(|id| ClientProgram::writer(id, ops))
            .collect();
        c.clients
            .extend((writers + 1..=writers + readers).map(|id| ClientProgram::reader(id, ops)));
        c.crashes = o.crashes.clone();
        if self.scenario == Scenario::Figure1 {
            c.policy = Policy::Scripted {
                steps: figure1_script(),
                after: AfterScript::Fifo,
            };
            c.crashes = vec![
                CrashSpec {
                    component: Component::Object(1),
                    step: 0,
                },
                CrashSpec {
                    component: Component::Client(ClientId(1)),
                    step: FIGURE1_CRASH_STEP,
                },
                CrashSpec {
                    component: Component::Client(ClientId(2)),
                    step: FIGURE1_CRASH_STEP,
                },
            ];
        }
        c.validate()
            .map_err(|e| SpecError::Invalid(e.to_string()))?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_expands_to_a_valid_config() {
        for s in ALL {
            let c = ExperimentSpec::new(s).to_config().unwrap();
            assert_eq!(c.n, 2 * c.f + c.k, "{s}");
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
    }

    #[test]
    fn overrides_apply() {
        let mut spec = ExperimentSpec::new(Scenario::RegularAdaptive);
        spec.overrides.writers = Some(2);
        spec.overrides.readers = Some(3);
        spec.overrides.f = Some(2);
        let c = spec.to_config().unwrap();
        assert_eq!((c.n, c.f, c.k), (8, 2, 4));
        assert_eq!(c.clients.len(), 5);
    }

    #[test]
    fn scripted_scenarios_reject_schedule_changes() {
        let mut spec = ExperimentSpec::new(Scenario::Figure1);
        spec.overrides.seed = Some(7);
        assert!(spec.to_config().is_ok());
        spec.overrides.writers = Some(5);
        assert!(matches!(
            spec.to_config(),
            Err(SpecError::FixedSchedule {
                flag: "writers",
                ..
            })
        ));
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let mut spec = ExperimentSpec::new(Scenario::SafeBasic);
        spec.overrides.n = Some(5);
        assert!(matches!(spec.to_config(), Err(SpecError::Invalid(_))));
    }
}
