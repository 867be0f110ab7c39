//! The `run`, `check` and `sweep` commands.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ecreg::checker::{max_write_concurrency, CheckReport};
use ecreg::sim::history_io::{read_history, write_history, HistoryHeader};
use ecreg::sim::{run, Config, Protocol, RunOutput, SimError, StorageTrace};
use ecreg::storage::{format_bits, Bits};
use rayon::prelude::*;
use thiserror::Error;

use crate::audit::{audit, failed, summary};
use crate::scenario::{ExperimentSpec, SpecError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error("{0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Outcome of a command that ran checks.
#[derive(Debug, Clone)]
pub struct Checked {
    pub reports: Vec<CheckReport>,
    pub text: String,
}

impl Checked {
    pub fn failed(&self) -> bool {
        failed(&self.reports)
    }
}

fn describe(label: &str, config: &Config, out: &RunOutput) -> String {
    let h = &out.history;
    let writes = h.writes().count();
    let reads = h.reads().count();
    let mut s = String::new();
    let _ = writeln!(s, "run: {label}");
    let _ = writeln!(
        s,
        "config: protocol={} n={} f={} k={} d_bits={} seed={} policy={} links={} steps={}",
        config.protocol,
        config.n,
        config.f,
        config.k,
        config.d_bits,
        config.seed,
        config.policy.name(),
        config.links,
        config.step_limit
    );
    let _ = writeln!(
        s,
        "end: {} after {} steps; writes returned {}/{}; reads returned {}/{}",
        h.end,
        h.steps,
        h.writes().filter(|w| w.returned()).count(),
        writes,
        h.reads().filter(|r| r.returned()).count(),
        reads
    );
    let _ = writeln!(
        s,
        "max storage: {} bits",
        format_bits(out.trace.max_total_bits())
    );
    for note in &out.trace.meta.notes {
        let _ = writeln!(s, "note: {note}");
    }
    s
}

fn report_text(head: String, reports: &[CheckReport]) -> String {
    let mut s = head;
    for r in reports {
        let _ = writeln!(s, "{r}");
    }
    let _ = writeln!(s, "{}", summary(reports));
    s
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(CliError::io(path))
}

/// Runs `config`, writes `trace.csv`, `history.txt`, `report.txt` and
/// `report.json` into `out_dir`, and returns the check results.
pub fn cmd_run(label: &str, config: &Config, out_dir: &Path) -> Result<Checked, CliError> {
    let out = run(config)?;
    fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;

    let trace_path = out_dir.join("trace.csv");
    write_file(&trace_path, out.trace.to_csv_string().as_bytes())?;

    let history_path = out_dir.join("history.txt");
    let header = HistoryHeader::for_run(config, &out);
    let file = File::create(&history_path).map_err(CliError::io(&history_path))?;
    write_history(BufWriter::new(file), &header, &out.history)
        .map_err(|e| CliError::Parse(e.to_string()))?;

    let reports = audit(config, &out.history, &out.trace);
    let text = report_text(describe(label, config, &out), &reports);
    write_file(&out_dir.join("report.txt"), text.as_bytes())?;
    let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
    write_file(&out_dir.join("report.json"), format!("{json}\n").as_bytes())?;
    Ok(Checked { reports, text })
}

/// Checks a history file and the matching trace file.
pub fn cmd_check(history_path: &Path, trace_path: &Path) -> Result<Checked, CliError> {
    let file = File::open(history_path).map_err(CliError::io(history_path))?;
    let (header, history) = read_history(BufReader::new(file))
        .map_err(|e| CliError::Parse(format!("{}: {e}", history_path.display())))?;
    let file = File::open(trace_path).map_err(CliError::io(trace_path))?;
    let trace = StorageTrace::read_csv(BufReader::new(file))
        .map_err(|e| CliError::Parse(format!("{}: {e}", trace_path.display())))?;
    let m = &trace.meta;
    if (m.protocol, m.n, m.f, m.k, m.d_bits)
        != (header.protocol, header.n, header.f, header.k, header.d_bits)
    {
        return Err(CliError::Parse(
            "history and trace describe different configurations".into(),
        ));
    }
    let config = header.to_config();
    let reports = audit(&config, &history, &trace);
    let head = format!(
        "check: {} and {}\n",
        history_path.display(),
        trace_path.display()
    );
    let text = report_text(head, &reports);
    Ok(Checked { reports, text })
}

/// Parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Number of writers, which caps write concurrency.
    C,
    Writers,
    Readers,
    Seed,
    F,
    K,
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "c" => SweepParam::C,
            "writers" => SweepParam::Writers,
            "readers" => SweepParam::Readers,
            "seed" => SweepParam::Seed,
            "f" => SweepParam::F,
            "k" => SweepParam::K,
            _ => {
                return Err(format!(
                    "cannot sweep {s:?} (expected c, writers, readers, seed, f or k)"
                ))
            }
        })
    }
}

impl SweepParam {
    fn name(self) -> &'static str {
        match self {
            SweepParam::C => "c",
            SweepParam::Writers => "writers",
            SweepParam::Readers => "readers",
            SweepParam::Seed => "seed",
            SweepParam::F => "f",
            SweepParam::K => "k",
        }
    }

    fn apply(self, spec: &mut ExperimentSpec, v: u64) {
        let o = &mut spec.overrides;
        match self {
            SweepParam::C | SweepParam::Writers => o.writers = Some(v as u32),
            SweepParam::Readers => o.readers = Some(v as u32),
            SweepParam::Seed => o.seed = Some(v),
            SweepParam::F => o.f = Some(v as usize),
            SweepParam::K => o.k = Some(v as usize),
        }
    }
}

/// The bound a sweep row is compared with.
pub fn storage_bound(config: &Config, out: &RunOutput) -> (&'static str, Bits) {
    let (n, k, d) = (config.n as u64, config.k as u64, config.d_bits);
    let chunk = Bits::new(d, k);
    match config.protocol {
        Protocol::Safe => ("nD/k", chunk * n),
        Protocol::Regular => {
            let c = max_write_concurrency(&out.history) as u64;
            if c + 2 <= k {
                ("(2f+k)(c+1)D/k", chunk * (n * (c + 1)))
            } else {
                ("(2f+k)2D", Bits::from_integer(n * 2 * d))
            }
        }
        Protocol::Strawman => {
            let c_plus = out.trace.rows.last().map_or(0, |r| u64::from(r.c_plus));
            ("|C+|D/k (lower)", chunk * c_plus)
        }
    }
}

pub const SWEEP_COLUMNS: &str =
    "param,value,max_total_bits,bound,bound_bits,c_observed,writes_returned,final_total_bits,end,checks";

/// Runs the base scenario once per value and returns the CSV table and
/// whether any run failed its checks.
pub fn cmd_sweep(
    param: SweepParam,
    values: &[u64],
    base: &ExperimentSpec,
) -> Result<(String, bool), CliError> {
    let configs: Vec<Config> = values
        .iter()
        .map(|&v| {
            let mut spec = base.clone();
            param.apply(&mut spec, v);
            spec.to_config()
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<Result<(String, bool), CliError>> = configs
        .par_iter()
        .zip(values.par_iter())
        .map(|(config, &v)| {
            let out = run(config)?;
            let reports = audit(config, &out.history, &out.trace);
            let bad = failed(&reports);
            let (bound, bound_bits) = storage_bound(config, &out);
            let last = out.trace.rows.last().expect("trace has the initial row");
            let row = format!(
                "{},{v},{},{bound},{},{},{},{},{},{}",
                param.name(),
                format_bits(out.trace.max_total_bits()),
                format_bits(bound_bits),
                max_write_concurrency(&out.history),
                last.writes_returned,
                format_bits(out.trace.total_bits(last)),
                out.history.end,
                if bad { "FAIL" } else { "PASS" }
            );
            Ok((row, bad))
        })
        .collect();
    let mut table = format!("{SWEEP_COLUMNS}\n");
    let mut any_failed = false;
    for r in rows {
        let (row, bad) = r?;
        any_failed |= bad;
        table.push_str(&row);
        table.push('\n');
    }
    Ok((table, any_failed))
}
