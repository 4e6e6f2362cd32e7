use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use riskstat_cli::config::RunConfig;
use riskstat_cli::io::{load_scenarios, Format};
use riskstat_cli::run::{exit_code, run, Stages};
use riskstat_cli::table;

/// Scenario-based risk statistics: evaluation, axiom suites, primal/dual
/// diagnostics, and decomposition, driven by one config file.
#[derive(Parser)]
#[command(name = "riskstat", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the configured statistic on the inputs.
    Eval(RunArgs),
    /// Run the configured axiom and property suites.
    Axioms(RunArgs),
    /// Evaluate plus the two-route primal representation.
    Primal(RunArgs),
    /// Evaluate plus the dual representation and penalty diagnostics.
    Dual(RunArgs),
    /// Reconstruct the two stages from the composition and report the
    /// round-trip residual per input.
    Decompose(RunArgs),
    /// Full pipeline: suites, evaluation, primal, dual, gap.
    Report(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Table,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input format when the extension is not .csv/.json.
    #[arg(long)]
    input_format: Option<Format>,
    /// Include wall-clock timings in the JSON report (non-deterministic).
    #[arg(long)]
    timings: bool,
    /// Scenario files (.csv or .json).
    inputs: Vec<PathBuf>,
}

fn stages_for(command: &Command) -> Stages {
    match command {
        Command::Eval(_) => Stages::eval_only(),
        Command::Axioms(_) => Stages {
            axioms: true,
            ..Stages::eval_only()
        },
        Command::Primal(_) => Stages {
            primal: true,
            ..Stages::eval_only()
        },
        Command::Dual(_) => Stages {
            dual: true,
            gap: true,
            ..Stages::eval_only()
        },
        Command::Decompose(_) => Stages {
            decompose: true,
            ..Stages::eval_only()
        },
        Command::Report(_) => Stages::everything(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stages = stages_for(&cli.command);
    let args = match &cli.command {
        Command::Eval(a)
        | Command::Axioms(a)
        | Command::Primal(a)
        | Command::Dual(a)
        | Command::Decompose(a)
        | Command::Report(a) => a,
    };
    match execute(args, stages) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(args: &RunArgs, stages: Stages) -> anyhow::Result<ExitCode> {
    let mut config = RunConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }

    let space = config.space()?;
    let mut inputs = Vec::new();
    for path in &args.inputs {
        inputs.extend(load_scenarios(path, args.input_format, Some(&space))?);
    }

    let report = run(&config, &inputs, stages, args.timings)?;
    let json = serde_json::to_string_pretty(&report)?;

    match (&args.out, args.format) {
        (Some(path), _) => {
            std::fs::write(path, format!("{json}\n"))?;
            if matches!(args.format, OutputFormat::Table) {
                print!("{}", table::render(&report));
            }
        }
        (None, OutputFormat::Json) => println!("{json}"),
        (None, OutputFormat::Table) => print!("{}", table::render(&report)),
    }

    Ok(ExitCode::from(exit_code(&report) as u8))
}
