use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use tceer_cli::{cmd_compare, cmd_run, cmd_trace, load_config, parse_seeds};

/// Trust, congestion and energy-aware routing simulator for sensor networks.
#[derive(Parser)]
#[command(name = "tceer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate TCEER and write rounds.csv, routes.txt and trust.csv.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the deployed topology to topology.txt.
        #[arg(long)]
        dump_topology: bool,
    },
    /// Compare rounds-to-50%-dead of TCEER and the greedy baseline.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Seeds as `1-10` or `1,4,9`.
        #[arg(long, default_value = "1-10")]
        seeds: String,
    },
    /// Send a burst of packets from one node and print their routes.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        source: usize,
        #[arg(long, default_value_t = 20)]
        packets: usize,
        /// Keep queues and energy fixed while tracing.
        #[arg(long)]
        freeze_state: bool,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `[CONFIG] [OUT] [KEY=VALUE...]`
    #[arg(value_name = "ARGS")]
    rest: Vec<String>,
}

struct Resolved {
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    overrides: Vec<String>,
}

impl Common {
    /// Positional words without `=` fill CONFIG then OUT, unless the flags
    /// already did.
    fn resolve(self) -> Result<Resolved> {
        let (mut config, mut out) = (self.config, self.out);
        let mut overrides = Vec::new();
        for word in self.rest {
            if word.contains('=') {
                overrides.push(word);
            } else if config.is_none() {
                config = Some(word.into());
            } else if out.is_none() {
                out = Some(word.into());
            } else {
                bail!("unexpected argument `{word}`");
            }
        }
        Ok(Resolved { config, out, overrides })
    }
}

fn with_seed(mut overrides: Vec<String>, seed: Option<u64>) -> Vec<String> {
    overrides.extend(seed.map(|s| format!("seed={s}")));
    overrides
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TCEER_LOG", "warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            common,
            seed,
            dump_topology,
        } => {
            let r = common.resolve()?;
            let config = load_config(r.config.as_deref(), &with_seed(r.overrides, seed))?;
            let out = r.out.unwrap_or_else(|| "out".into());
            println!("{}", cmd_run(&config, &out, dump_topology)?);
        }
        Command::Compare { common, seeds } => {
            let r = common.resolve()?;
            let config = load_config(r.config.as_deref(), &r.overrides)?;
            let out = r.out.unwrap_or_else(|| "out".into());
            println!("{}", cmd_compare(&config, &parse_seeds(&seeds)?, &out)?);
        }
        Command::Trace {
            common,
            seed,
            source,
            packets,
            freeze_state,
        } => {
            let r = common.resolve()?;
            let config = load_config(r.config.as_deref(), &with_seed(r.overrides, seed))?;
            println!(
                "{}",
                cmd_trace(&config, source, packets, freeze_state, r.out.as_deref())?
            );
        }
    }
    Ok(())
}
