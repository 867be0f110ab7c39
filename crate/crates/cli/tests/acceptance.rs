//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Tolerances are pinned below; storage comparisons are exact.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use ecreg::checker::{
    check_liveness, check_storage_bounds, check_strong_regularity, check_strongly_safe,
    max_write_concurrency, CheckMode, LivenessMode, Verdict,
};
use ecreg::client::ClientProgram;
use ecreg::codec::{decode, encode, Value};
use ecreg::regular_register::check_availability;
use ecreg::sim::fuzz::FuzzSpec;
use ecreg::sim::history_io::{write_history, HistoryHeader};
use ecreg::sim::{run, run_observed, Config, Links, Policy, Protocol, RunOutput};
use ecreg::storage::Bits;
use ecreg::types::{History, RunEnd};
use ecreg_cli::commands::{cmd_sweep, SweepParam};
use ecreg_cli::scenario::{ExperimentSpec, Scenario};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEEDS: u64 = 1000;
const D: u64 = 1024;
const CODEC_TIME_LIMIT: Duration = Duration::from_secs(10);
const SAFE_TIME_LIMIT: Duration = Duration::from_secs(120);
const LOWER_BOUND_TIME_LIMIT: Duration = Duration::from_secs(60);
const WRITES_CEASE_BY: u64 = 50_000;
const READS_RETURN_BY: u64 = 100_000;
/// Random sub-histories per run compared against the brute-force oracle, on
/// top of every window of consecutive operations.
const RANDOM_SUBHISTORIES: usize = 20;
const MAX_SUBHISTORY_OPS: usize = 6;

/// Every run made by criteria 1 to 9, with a hash of its CSV trace and
/// JSONL history, replayed by criterion 10.
static RUNS: Mutex<Vec<(Config, u64)>> = Mutex::new(Vec::new());

fn fingerprint(config: &Config, out: &RunOutput) -> u64 {
    let mut bytes = out.trace.to_csv_string().into_bytes();
    write_history(
        &mut bytes,
        &HistoryHeader::for_run(config, out),
        &out.history,
    )
    .expect("in-memory write");
    let mut h = DefaultHasher::new();
    bytes.hash(&mut h);
    h.finish()
}

fn record(config: &Config, out: &RunOutput) {
    let fp = fingerprint(config, out);
    RUNS.lock().unwrap().push((config.clone(), fp));
}

fn sim(config: &Config) -> RunOutput {
    let out = run(config).expect("valid configuration");
    record(config, &out);
    out
}

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        ok: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        ok: false,
        detail: detail.into(),
    }
}

fn first_error(errors: Vec<String>) -> Option<String> {
    let n = errors.len();
    errors.into_iter().next().map(|e| {
        if n > 1 {
            format!("{e} (and {} more)", n - 1)
        } else {
            e
        }
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut decodes = 0u64;
    for n in 1..=8usize {
        for k in 1..=n {
            for len in 1..=64usize {
                let bytes: Vec<u8> = (0..len)
                    .map(|i| (i * 131 + n * 17 + k * 5 + len) as u8)
                    .collect();
                let v = Value::new(bytes).unwrap();
                let pieces = encode(&v, n, k).unwrap();
                for mask in 0u32..1 << n {
                    let subset: Vec<_> = pieces
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, p)| p)
                        .collect();
                    if subset.len() < k {
                        continue;
                    }
                    decodes += 1;
                    match decode(subset.iter().copied(), n, k) {
                        Ok(got) if got == v => {}
                        other => {
                            return fail(format!("n={n} k={k} len={len} mask={mask:#b}: {other:?}"))
                        }
                    }
                }
            }
        }
    }
    let t = start.elapsed();
    let detail = format!(
        "{decodes} subset decodes in {:.2}s (limit {}s)",
        t.as_secs_f64(),
        CODEC_TIME_LIMIT.as_secs()
    );
    if t < CODEC_TIME_LIMIT {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn safe_spec() -> FuzzSpec {
    FuzzSpec::new(Protocol::Safe, 4, 1, 2)
}

fn criterion_2() -> Outcome {
    let want = Bits::from_integer(4 * D / 2);
    let errors: Vec<String> = (0..SEEDS)
        .into_par_iter()
        .filter_map(|seed| {
            let out = sim(&safe_spec().config(seed));
            let bad = out
                .trace
                .rows
                .iter()
                .find(|r| out.trace.total_bits(r) != want)?;
            Some(format!(
                "seed {seed} step {}: {} bits",
                bad.step,
                out.trace.total_bits(bad)
            ))
        })
        .collect();
    match first_error(errors) {
        None => pass(format!("{SEEDS} runs, every step exactly {want} bits")),
        Some(e) => fail(e),
    }
}

/// Consecutive windows by invocation order plus seeded random subsets.
fn subhistories(h: &History, seed: u64) -> Vec<Vec<usize>> {
    let mut ids: Vec<usize> = h.ops.iter().map(|o| o.id).collect();
    ids.sort_by_key(|&i| (h.ops[i].invoke_time, i));
    let width = MAX_SUBHISTORY_OPS.min(ids.len());
    let mut out: Vec<Vec<usize>> = ids.windows(width).map(<[usize]>::to_vec).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for size in (1..=width).cycle().take(RANDOM_SUBHISTORIES) {
        out.push(ids.choose_multiple(&mut rng, size).copied().collect());
    }
    out
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let compared = std::sync::atomic::AtomicUsize::new(0);
    let errors: Vec<String> = (0..SEEDS)
        .into_par_iter()
        .filter_map(|seed| {
            let out = sim(&safe_spec().config(seed));
            let h = &out.history;
            let r = check_strongly_safe(h, CheckMode::Witness);
            if !r.passed() {
                return Some(format!("seed {seed}: {r}"));
            }
            let r = check_liveness(h, LivenessMode::WaitFree);
            if !r.passed() {
                return Some(format!("seed {seed}: {r}"));
            }
            for ids in subhistories(h, seed) {
                let sub = h.restrict(&ids);
                let a = check_strongly_safe(&sub, CheckMode::Witness);
                let b = check_strongly_safe(&sub, CheckMode::BruteForce);
                compared.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if a.verdict != b.verdict || a.verdict == Verdict::Inconclusive {
                    return Some(format!(
                        "seed {seed} ops {ids:?}: witness {} vs brute force {}",
                        a.verdict, b.verdict
                    ));
                }
            }
            None
        })
        .collect();
    let t = start.elapsed();
    let detail = format!(
        "{SEEDS} runs strongly safe and wait-free, oracle agrees on {} sub-histories, {:.1}s (limit {}s)",
        compared.into_inner(),
        t.as_secs_f64(),
        SAFE_TIME_LIMIT.as_secs()
    );
    match first_error(errors) {
        Some(e) => fail(e),
        None if t >= SAFE_TIME_LIMIT => fail(detail),
        None => pass(detail),
    }
}

const REGULAR_SHAPES: [(usize, usize); 3] = [(1, 2), (2, 3), (1, 4)];

fn adversarial_spec(f: usize, k: usize) -> FuzzSpec {
    let mut s = FuzzSpec::new(Protocol::Regular, 2 * f + k, f, k);
    s.writers = 1..=(k as u32 + 2);
    s.policies = vec![
        Policy::AdversaryAd,
        Policy::StarveReaders,
        Policy::FairRandom,
        Policy::Fifo,
    ];
    s.links = vec![Links::Fifo, Links::Unordered];
    s
}

fn criterion_4() -> Outcome {
    let mut details = Vec::new();
    for (f, k) in REGULAR_SHAPES {
        let cap = Bits::from_integer((2 * f + k) as u64 * 2 * D);
        let spec = adversarial_spec(f, k);
        let results: Vec<Result<Bits, String>> = (0..SEEDS)
            .into_par_iter()
            .map(|seed| {
                let out = sim(&spec.config(seed));
                let max = out.trace.max_total_bits();
                if max > cap {
                    Err(format!("f={f} k={k} seed {seed}: {max} > {cap}"))
                } else {
                    Ok(max)
                }
            })
            .collect();
        let mut worst = Bits::from_integer(0);
        for r in results {
            match r {
                Ok(m) => worst = worst.max(m),
                Err(e) => return fail(e),
            }
        }
        details.push(format!("(f={f},k={k}) max {worst} <= {cap}"));
    }
    pass(format!("{SEEDS} runs each: {}", details.join(", ")))
}

fn criterion_5() -> Outcome {
    let base = ExperimentSpec::new(Scenario::RegularAdaptive);
    for c in 0..=2u64 {
        let mut spec = base.clone();
        spec.overrides.writers = Some(c as u32);
        let config = spec.to_config().unwrap();
        sim(&config);
    }
    let (table, any_failed) = match cmd_sweep(SweepParam::C, &[0, 1, 2], &base) {
        Ok(t) => t,
        Err(e) => return fail(e.to_string()),
    };
    let mut cells = Vec::new();
    for (c, line) in table.lines().skip(1).enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let want = (6 * (c as u64 + 1) * 256).to_string();
        if cols[2] != want || cols[4] != want || cols[5] != c.to_string() {
            return fail(format!("c={c}: row {line:?}, formula gives {want}"));
        }
        cells.push(format!("c={c}: {}", cols[2]));
    }
    if any_failed || cells.len() != 3 {
        return fail(format!("sweep checks failed:\n{table}"));
    }
    pass(format!(
        "max storage equals 6(c+1)256 exactly ({})",
        cells.join(", ")
    ))
}

fn criterion_6() -> Outcome {
    let mut checked = 0;
    for (f, k) in REGULAR_SHAPES {
        let mut spec = FuzzSpec::new(Protocol::Regular, 2 * f + k, f, k);
        spec.writers = 1..=(k as u32 + 2);
        spec.client_crash_chance = 0.0;
        spec.policies = vec![Policy::FairRandom, Policy::Fifo];
        let errors: Vec<String> = (0..SEEDS / 2)
            .into_par_iter()
            .filter_map(|seed| {
                let out = sim(&spec.config(seed));
                let t = &out.trace;
                if out.history.end != RunEnd::Quiescent {
                    return Some(format!(
                        "f={f} k={k} seed {seed}: run ended {}",
                        out.history.end
                    ));
                }
                let last = t.rows.last().unwrap();
                let want = Bits::new(t.meta.live_objects() as u64 * D, k as u64);
                (t.live_bits(last) != want)
                    .then(|| format!("f={f} k={k} seed {seed}: {} != {want}", t.live_bits(last)))
            })
            .collect();
        if let Some(e) = first_error(errors) {
            return fail(e);
        }
        checked += SEEDS / 2;
    }
    pass(format!(
        "{checked} quiescent runs end at (live objects)·D/k exactly"
    ))
}

fn criterion_7() -> Outcome {
    let mut runs = 0;
    let mut fair_runs = 0;
    for (f, k) in REGULAR_SHAPES {
        let mut spec = adversarial_spec(f, k);
        spec.step_limit = READS_RETURN_BY;
        let errors: Vec<String> = (0..SEEDS / 3 + 1)
            .into_par_iter()
            .filter_map(|seed| {
                let c = spec.config(seed);
                let out = sim(&c);
                let h = &out.history;
                let r = check_strong_regularity(h, CheckMode::Witness);
                if !r.passed() {
                    return Some(format!("f={f} k={k} seed {seed}: {r}"));
                }
                if c.policy == Policy::AdversaryAd {
                    return None;
                }
                let last_invoke = h.writes().map(|w| w.invoke_time).max().unwrap_or(0);
                if last_invoke > WRITES_CEASE_BY {
                    return Some(format!(
                        "f={f} k={k} seed {seed}: a write was invoked at step {last_invoke}"
                    ));
                }
                let late = h.reads().find(|r| {
                    h.is_correct(r.client) && r.return_time.is_none_or(|t| t > READS_RETURN_BY)
                });
                if let Some(rd) = late {
                    return Some(format!(
                        "f={f} k={k} seed {seed}: read #{} did not return by {READS_RETURN_BY}",
                        rd.id
                    ));
                }
                let r = check_liveness(h, LivenessMode::FwTerminating);
                (!r.passed()).then(|| format!("f={f} k={k} seed {seed}: {r}"))
            })
            .collect();
        if let Some(e) = first_error(errors) {
            return fail(e);
        }
        runs += SEEDS / 3 + 1;
        fair_runs += (0..SEEDS / 3 + 1)
            .filter(|&s| spec.config(s).policy != Policy::AdversaryAd)
            .count();
    }
    pass(format!(
        "{runs} runs strongly regular; in the {fair_runs} non-adversarial ones every correct read returned by step {READS_RETURN_BY}"
    ))
}

fn criterion_8() -> Outcome {
    let shapes = [(1, 1), (1, 2), (1, 3), (1, 4), (2, 1), (2, 2)];
    let mut steps = 0usize;
    for (f, k) in shapes {
        let spec = adversarial_spec(f, k);
        let results: Vec<Result<usize, String>> = (0..200u64)
            .into_par_iter()
            .map(|seed| {
                let c = spec.config(seed);
                let mut violation = None;
                let mut count = 0;
                let out = run_observed(&c, &mut |r| {
                    count += 1;
                    if violation.is_none() {
                        violation = check_availability(r.objects, f, k)
                            .err()
                            .map(|v| (r.step, v));
                    }
                })
                .expect("valid configuration");
                record(&c, &out);
                match violation {
                    Some((step, v)) => Err(format!(
                        "n={} f={f} k={k} seed {seed} step {step}: {v:?}",
                        c.n
                    )),
                    None => Ok(count),
                }
            })
            .collect();
        for r in results {
            match r {
                Ok(c) => steps += c,
                Err(e) => return fail(e),
            }
        }
    }
    pass(format!(
        "every (n-f)-subset checked at {steps} steps over 1200 runs with n = 3..6"
    ))
}

fn strawman_demo(n: usize, f: usize, k: usize, writers: u32) -> Config {
    let mut c = Config::new(Protocol::Strawman, n, f, k);
    c.policy = Policy::AdversaryAd;
    c.step_limit = 20_000;
    c.clients = (1..=writers)
        .map(|id| ClientProgram::writer(id, 1))
        .collect();
    c
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let mut finals = Vec::new();
    for m in [8u64, 16, 32] {
        let c = strawman_demo(4, 1, 2, m as u32);
        let out = sim(&c);
        let t = &out.trace;
        if out.history.writes().any(|w| w.returned()) {
            return fail(format!("m={m}: a write completed"));
        }
        if t.rows
            .windows(2)
            .any(|w| t.total_bits(&w[1]) < t.total_bits(&w[0]))
        {
            return fail(format!("m={m}: storage decreased"));
        }
        if let Some(r) = t.rows.iter().find(|r| r.f_members.len() > 1) {
            return fail(format!(
                "m={m}: |F| = {} at step {}",
                r.f_members.len(),
                r.step
            ));
        }
        let last = t.rows.last().unwrap();
        let floor = Bits::from_integer(m * D / 2);
        if t.attributed_bits(last) < floor {
            return fail(format!(
                "m={m}: attributed {} < {floor}",
                t.attributed_bits(last)
            ));
        }
        let c_obs = max_write_concurrency(&out.history);
        let r = check_storage_bounds(t, &c, c_obs);
        if !r.passed() {
            return fail(format!("m={m}: {r}"));
        }
        finals.push((m, t.total_bits(last)));
    }
    let slope = |a: (u64, Bits), b: (u64, Bits)| (b.1 - a.1) / (b.0 - a.0);
    let (s1, s2) = (slope(finals[0], finals[1]), slope(finals[1], finals[2]));
    if s1 != s2 || s1 < Bits::new(D, 2) {
        return fail(format!(
            "storage is not linear in m: slopes {s1} and {s2} bits per writer"
        ));
    }

    let c = strawman_demo(3, 1, 1, 4);
    let out = sim(&c);
    let t = &out.trace;
    let full = t.rows.iter().find(|r| {
        r.f_members.len() >= 2
            && r.f_members
                .iter()
                .all(|&o| t.object_bits(r, o) >= Bits::from_integer(D))
    });
    let Some(row) = full else {
        return fail("k=1: never two objects holding a full value");
    };
    let el = start.elapsed();
    if el >= LOWER_BOUND_TIME_LIMIT {
        return fail(format!("took {:.1}s", el.as_secs_f64()));
    }
    let sizes: Vec<String> = finals.iter().map(|(m, b)| format!("m={m}: {b}")).collect();
    pass(format!(
        "no write completes, |F| <= 1, storage {} ({s1} bits per writer); k=1 reaches |F| = 2 at step {}; {:.1}s",
        sizes.join(", "),
        row.step,
        el.as_secs_f64()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn criterion_10() -> Outcome {
    let runs = std::mem::take(&mut *RUNS.lock().unwrap());
    let mismatches: Vec<String> = runs
        .par_iter()
        .filter_map(|(config, fp)| {
            let out = run(config).expect("ran before");
            (fingerprint(config, &out) != *fp).then(|| {
                format!(
                    "{} n={} seed={} policy={}",
                    config.protocol,
                    config.n,
                    config.seed,
                    config.policy.name()
                )
            })
        })
        .collect();
    match first_error(mismatches) {
        None => pass(format!(
            "{} runs replayed with byte-identical trace CSV and history JSONL",
            runs.len()
        )),
        Some(e) => fail(format!("differs on rerun: {e}")),
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "codec: every subset of at least k pieces decodes",
            criterion_1,
        ),
        ("safe storage is nD/k at every step", criterion_2),
        (
            "safe runs are strongly safe and wait-free; oracle agrees",
            criterion_3,
        ),
        ("regular storage never exceeds (2f+k)2D", criterion_4),
        (
            "regular storage under concurrency c is (2f+k)(c+1)D/k",
            criterion_5,
        ),
        (
            "quiescent storage is one piece per live object",
            criterion_6,
        ),
        (
            "regular runs are strongly regular and FW-terminating",
            criterion_7,
        ),
        ("availability invariant holds at every step", criterion_8),
        (
            "adversary keeps strawman writes pending, storage linear in writers",
            criterion_9,
        ),
        ("runs are deterministic", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        failures += usize::from(!out.ok);
        println!(
            "{} criterion {}: {name} [{}] ({:.1}s)",
            if out.ok { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
