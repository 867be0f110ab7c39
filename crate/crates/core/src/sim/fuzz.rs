//! Seeded generation of random run configurations.

use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Component, Config, CrashSpec, Links, Policy, Protocol};
use crate::client::ClientProgram;
use crate::types::ClientId;

/// Ranges from which [`FuzzSpec::config`] draws one configuration per seed.
#[derive(Debug, Clone)]
pub struct FuzzSpec {
    pub protocol: Protocol,
    pub n: usize,
    pub f: usize,
    pub k: usize,
    pub d_bits: u64,
    pub writers: RangeInclusive<u32>,
    pub readers: RangeInclusive<u32>,
    /// Operations per client.
    pub ops: RangeInclusive<usize>,
    /// Crash up to `f` objects.
    pub object_crashes: bool,
    /// Probability that a given client crashes.
    pub client_crash_chance: f64,
    /// Crashes happen at a step drawn from `0..crash_window`.
    pub crash_window: u64,
    pub policies: Vec<Policy>,
    pub links: Vec<Links>,
    pub step_limit: u64,
    pub max_read_rounds: Option<u32>,
}

impl FuzzSpec {
    pub fn new(protocol: Protocol, n: usize, f: usize, k: usize) -> Self {
        Self {
            protocol,
            n,
            f,
            k,
            d_bits: 1024,
            writers: 1..=3,
            readers: 1..=2,
            ops: 1..=4,
            object_crashes: true,
            client_crash_chance: 0.2,
            crash_window: 150,
            policies: vec![Policy::FairRandom],
            links: vec![Links::Fifo],
            step_limit: super::DEFAULT_STEP_LIMIT,
            max_read_rounds: None,
        }
    }

    pub fn config(&self, seed: u64) -> Config {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0x5eed);
        let mut c = Config::new(self.protocol, self.n, self.f, self.k);
        c.d_bits = self.d_bits;
        c.seed = seed;
        c.step_limit = self.step_limit;
        c.max_read_rounds = self.max_read_rounds;
        c.policy = self
            .policies
            .choose(&mut rng)
            .cloned()
            .unwrap_or(Policy::FairRandom);
        c.links = self.links.choose(&mut rng).copied().unwrap_or(Links::Fifo);

        let writers = rng.gen_range(self.writers.clone());
        let readers = rng.gen_range(self.readers.clone());
        for id in 1..=writers {
            c.clients
                .push(ClientProgram::writer(id, rng.gen_range(self.ops.clone())));
        }
        for id in writers + 1..=writers + readers {
            c.clients
                .push(ClientProgram::reader(id, rng.gen_range(self.ops.clone())));
        }

        let window = self.crash_window.max(1);
        if self.object_crashes {
            let count = rng.gen_range(0..=self.f);
            let mut objects: Vec<usize> = (1..=self.n).collect();
            objects.shuffle(&mut rng);
            for &o in &objects[..count] {
                c.crashes.push(CrashSpec {
                    component: Component::Object(o),
                    step: rng.gen_range(0..window),
                });
            }
        }
        for id in 1..=writers + readers {
            if rng.gen_bool(self.client_crash_chance) {
                c.crashes.push(CrashSpec {
                    component: Component::Client(ClientId(id)),
                    step: rng.gen_range(0..window),
                });
            }
        }
        c
    }
}
