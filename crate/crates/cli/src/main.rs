use clap::{Parser, Subcommand};
use drypath_cli::{run, RunSpec};
use std::path::PathBuf;

/// Joint optimizer for staged drying schedules: picks the technology
/// sequence and the per-stage residence times and air temperatures.
#[derive(Parser)]
#[command(name = "drypath", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file (JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for result files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Dotted-path config overrides, e.g. --set process.alpha=0.2
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Seed for the deterministic multistart samplers.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Stream the iteration trace to stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Jointly optimize the technology sequence and stage parameters.
    Solve,
    /// Forward-simulate an explicit path at explicit stage parameters.
    Simulate,
    /// Optimal single-stage schedules for both technologies.
    Baseline,
    /// One solve per allowed stage count.
    SweepM,
    /// One solve per hot-air cost weight.
    SweepAlpha,
    /// Brute-force reference optimization over every path.
    Oracle,
}

fn main() {
    let cli = Cli::parse();
    let spec = RunSpec {
        command: match cli.command {
            Command::Solve => drypath_cli::Subcommand::Solve,
            Command::Simulate => drypath_cli::Subcommand::Simulate,
            Command::Baseline => drypath_cli::Subcommand::Baseline,
            Command::SweepM => drypath_cli::Subcommand::SweepM,
            Command::SweepAlpha => drypath_cli::Subcommand::SweepAlpha,
            Command::Oracle => drypath_cli::Subcommand::Oracle,
        },
        config_path: cli.config,
        output_dir: cli.out,
        overrides: cli.overrides,
        seed: cli.seed,
        verbose: cli.verbose,
    };
    if let Err(err) = run(&spec) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
