use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ecreg::sim::config_file::parse_config;
use ecreg::sim::{CrashSpec, Links, Policy};
use ecreg_cli::commands::{cmd_check, cmd_run, cmd_sweep, CliError, SweepParam};
use ecreg_cli::parse_values;
use ecreg_cli::scenario::{ExperimentSpec, Overrides, Scenario};

/// Simulate and check erasure-coded registers over crash-prone base objects.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 on usage
/// or input errors.
#[derive(Parser)]
#[command(name = "ecreg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (or a config file) and write trace.csv, history.txt and report.txt.
    Run {
        /// safe-basic, regular-adaptive, regular-worstcase, lowerbound-demo, figure1 or figure2.
        scenario: Option<Scenario>,
        /// Read the run description from a file instead of a scenario.
        #[arg(long, conflicts_with = "scenario")]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a history file and its storage trace.
    Check { history: PathBuf, trace: PathBuf },
    /// Run a scenario once per parameter value and print a storage table.
    Sweep {
        /// c, writers, readers, seed, f or k.
        param: SweepParam,
        /// Values such as `0,1,2`, `1..4` or `8..=32`.
        #[arg(value_parser = parse_values)]
        values: std::vec::Vec<u64>,
        /// The scenario to vary.
        #[arg(long, default_value = "regular-adaptive")]
        scenario: Scenario,
        #[command(flatten)]
        flags: Flags,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct Flags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    f: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Value size in bits (a multiple of 8).
    #[arg(long = "d-bits")]
    d_bits: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Step limit.
    #[arg(long)]
    steps: Option<u64>,
    /// fair, ad, fifo or starve-readers.
    #[arg(long)]
    policy: Option<Policy>,
    /// fifo or unordered.
    #[arg(long)]
    links: Option<Links>,
    #[arg(long)]
    writers: Option<u32>,
    #[arg(long)]
    readers: Option<u32>,
    /// Operations per client.
    #[arg(long)]
    ops: Option<usize>,
    /// Round budget for regular reads.
    #[arg(long = "max-read-rounds")]
    max_read_rounds: Option<u32>,
    /// Crash a component before a step: `obj:step`, `o<obj>:step` or `c<client>:step`. Repeatable.
    #[arg(long = "crash")]
    crashes: Vec<CrashSpec>,
}

impl Flags {
    fn overrides(self) -> Overrides {
        Overrides {
            n: self.n,
            f: self.f,
            k: self.k,
            d_bits: self.d_bits,
            seed: self.seed,
            steps: self.steps,
            policy: self.policy,
            links: self.links,
            writers: self.writers,
            readers: self.readers,
            ops: self.ops,
            max_read_rounds: self.max_read_rounds,
            crashes: self.crashes,
        }
    }
}

fn from_file(path: &PathBuf, flags: Flags) -> Result<ecreg::sim::Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.clone(),
        source,
    })?;
    let mut c =
        parse_config(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let o = flags.overrides();
    if o.n.is_some()
        || o.f.is_some()
        || o.k.is_some()
        || o.writers.is_some()
        || o.readers.is_some()
        || o.ops.is_some()
    {
        return Err(CliError::Parse("with --config, only --seed, --steps, --policy, --links, --d-bits, --max-read-rounds and --crash apply".into()));
    }
    c.seed = o.seed.unwrap_or(c.seed);
    c.step_limit = o.steps.unwrap_or(c.step_limit);
    c.policy = o.policy.unwrap_or(c.policy);
    c.links = o.links.unwrap_or(c.links);
    c.d_bits = o.d_bits.unwrap_or(c.d_bits);
    c.max_read_rounds = o.max_read_rounds.or(c.max_read_rounds);
    c.crashes.extend(o.crashes);
    c.validate().map_err(|e| CliError::Parse(e.to_string()))?;
    Ok(c)
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run {
            scenario,
            config,
            flags,
            out,
        } => {
            let (label, config) = match (scenario, config) {
                (Some(s), None) => {
                    let spec = ExperimentSpec {
                        scenario: s,
                        overrides: flags.overrides(),
                    };
                    (s.to_string(), spec.to_config()?)
                }
                (None, Some(path)) => (path.display().to_string(), from_file(&path, flags)?),
                _ => return Err(CliError::Parse("give a scenario or --config FILE".into())),
            };
            let checked = cmd_run(&label, &config, &out)?;
            print!("{}", checked.text);
            Ok(!checked.failed())
        }
        Command::Check { history, trace } => {
            let checked = cmd_check(&history, &trace)?;
            print!("{}", checked.text);
            Ok(!checked.failed())
        }
        Command::Sweep {
            param,
            values,
            scenario,
            flags,
            out,
        } => {
            let base = ExperimentSpec {
                scenario,
                overrides: flags.overrides(),
            };
            let (table, any_failed) = cmd_sweep(param, &values, &base)?;
            match out {
                Some(path) => {
                    std::fs::write(&path, &table).map_err(|source| CliError::Io { path, source })?
                }
                None => print!("{table}"),
            }
            Ok(!any_failed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
