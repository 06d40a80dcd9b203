use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use wcoalg::scenario::{self, CheckLevel, RunOptions, Scenario};

/// Run W-type scenarios over coalgebras for cartesian comonads.
#[derive(Parser)]
#[command(name = "wcoalg", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load a scenario and execute its commands.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
    /// Load and validate a scenario without running its commands.
    Check { scenario: PathBuf },
}

#[derive(Args)]
struct Opts {
    /// Override the scenario's iteration limit.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Override the scenario's element budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Override the scenario's sample seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, value_enum, default_value_t = Level::Touched)]
    check_level: Level,
    /// Record per-command wall-clock time. Reports are then no longer
    /// reproducible byte for byte.
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Touched,
    #[value(name = "touched+sampled")]
    TouchedSampled,
}

fn load(path: &Path) -> anyhow::Result<Scenario> {
    scenario::load(path).with_context(|| format!("loading {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Cmd::Check { scenario } => {
            let s = load(&scenario)?;
            println!(
                "{}: {} world, {} objects, {} commands",
                scenario.display(),
                s.world.name(),
                s.objects.len(),
                s.commands.len()
            );
            Ok(true)
        }
        Cmd::Run { scenario, opts } => {
            let mut s = load(&scenario)?;
            if let Some(n) = opts.max_steps {
                s.budgets.max_steps = n;
            }
            if let Some(n) = opts.budget {
                s.budgets.element_budget = n;
            }
            if let Some(n) = opts.seed {
                s.budgets.sample_seed = n;
            }
            let options = RunOptions {
                check_level: match opts.check_level {
                    Level::Touched => CheckLevel::Touched,
                    Level::TouchedSampled => CheckLevel::TouchedSampled,
                },
                timings: opts.timings,
            };
            let report = scenario::run(&s, &options);
            match opts.format {
                Format::Text => print!("{}", report.to_text()),
                Format::Json => println!("{}", report.to_json()),
            }
            Ok(report.passed)
        }
    }
}
