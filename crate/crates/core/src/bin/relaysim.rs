use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relaysim::report::{write_report, Format, Report};
use relaysim::{parse_config, run_simulation, search::search, sweep, Error, Execution, Result};

#[derive(Parser)]
#[command(name = "relaysim", version, about = "Two-way buffer-aided relaying simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the dual search only and emit the multipliers and drift trace.
    Search(Common),
    /// Search, then simulate one protocol.
    Run(Common),
    /// Run every value and protocol of the config's [sweep] section.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    frames: Option<u64>,
    /// csv or json (json-like is accepted as an alias).
    #[arg(long, default_value = "json")]
    format: String,
    /// Evaluate drift batches and sweep rows on one thread.
    #[arg(long)]
    sequential: bool,
}

fn execute(cmd: Command) -> Result<()> {
    let (Command::Search(c) | Command::Run(c) | Command::Sweep(c)) = &cmd;
    let format: Format = c.format.parse()?;
    let text = std::fs::read_to_string(&c.config).map_err(|source| Error::Io { path: c.config.clone(), source })?;
    let mut cfg = parse_config(&text)?;
    cfg.override_with(c.seed, c.frames)?;
    if c.sequential {
        cfg.run.search.execution = Execution::Sequential;
    }
    let report = match cmd {
        Command::Search(_) => Report::Search(search(cfg.run.protocol, &cfg.run.scenario, &cfg.run.search)?),
        Command::Run(_) => Report::Run(Box::new(run_simulation(&cfg.run)?)),
        Command::Sweep(_) => {
            let spec = cfg.sweep.as_ref().ok_or_else(|| Error::Invalid("config has no [sweep] section".into()))?;
            Report::Sweep(sweep(&cfg.run, &cfg.scenario_db, spec)?)
        }
    };
    write_report(&report, c.out.as_deref(), format)
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
