mod commands;
mod config;
mod error;
mod output;
mod selfcheck;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use faraday_core::units::angular_to_ghz;

use crate::config::RunConfig;
use crate::error::CliError;

/// Faraday-rotation spin readout simulator.
///
/// Every run starts from the bundled defaults (`configs/default.toml`),
/// merges `--config`, then applies each `--set KEY=VALUE` in order.
#[derive(Parser, Debug)]
#[command(name = "faraday", version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// TOML run configuration (must contain `seed` unless --seed is given).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. `--set probe.detuning_ghz=66`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output file; `.json` selects JSON, anything else CSV. Default: CSV on stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// RNG seed (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Re-run the command and configuration recorded in an earlier output file.
    #[arg(long, global = true, value_name = "FILE")]
    replay: Option<PathBuf>,

    /// Worker threads for sweeps (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// One-dimensional sweep of the polarimeter signal.
    Spectrum,
    /// Two-dimensional map (needs [sweep.axis2]).
    Map,
    /// Shot-noise and back-action budget at the operating point.
    Budget,
    /// Faraday rotation against pump detuning for each probe detuning.
    Prepare,
    /// Quantum-jump trajectory with binned photon counts.
    Trajectory,
    /// Run the built-in invariant suite.
    Selfcheck,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Map => "map",
            Command::Budget => "budget",
            Command::Prepare => "prepare",
            Command::Trajectory => "trajectory",
            Command::Selfcheck => "selfcheck",
        }
    }

    fn parse(name: &str) -> Option<Self> {
        [
            Command::Spectrum,
            Command::Map,
            Command::Budget,
            Command::Prepare,
            Command::Trajectory,
            Command::Selfcheck,
        ]
        .into_iter()
        .find(|c| c.name() == name)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot set up thread pool: {e}")))?;
    }

    let (command, cfg) = match &cli.replay {
        Some(path) => {
            if cli.config.is_some() || !cli.set.is_empty() || cli.seed.is_some() {
                return Err(CliError::Usage(
                    "--replay takes the configuration from the file; drop --config/--set/--seed"
                        .into(),
                ));
            }
            let rec = output::read_recorded(path)?;
            let recorded = Command::parse(&rec.command).ok_or_else(|| {
                CliError::Parse(format!(
                    "{}: unknown recorded command `{}`",
                    path.display(),
                    rec.command
                ))
            })?;
            if let Some(c) = cli.command {
                if c != recorded {
                    return Err(CliError::Usage(format!(
                        "{} was produced by `{}`, not `{}`",
                        path.display(),
                        recorded.name(),
                        c.name()
                    )));
                }
            }
            (recorded, config::from_resolved(&rec.config)?)
        }
        None => {
            let Some(c) = cli.command else {
                return Err(CliError::Usage(
                    "no command given; try `faraday --help`".into(),
                ));
            };
            (c, config::load(cli.config.as_deref(), &cli.set, cli.seed)?)
        }
    };

    echo(&cfg);
    let table = match command {
        Command::Spectrum => commands::spectrum(&cfg)?,
        Command::Map => commands::map(&cfg)?,
        Command::Budget => commands::budget(&cfg)?,
        Command::Prepare => commands::prepare(&cfg)?,
        Command::Trajectory => commands::trajectory(&cfg)?,
        Command::Selfcheck => return selfcheck::run(&cfg),
    };
    table.write(cli.out.as_deref())
}

fn echo(cfg: &RunConfig) {
    let p = cfg.params();
    let b = cfg.operating.b_field_t;
    eprintln!(
        "faraday: gamma/2pi = {:.2} GHz, Zeeman splitting at B = {} T: {:.3} GHz, seed = {}",
        p.gamma_hz() * 1e-9,
        output::fmt_f64(b),
        angular_to_ghz(p.zeeman_splitting(b)),
        cfg.seed
    );
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("faraday: error: {e}");
        std::process::exit(e.exit_code());
    }
}
