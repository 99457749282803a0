mod chaos;
mod dim;
mod expand;
mod output;
mod pairs;
mod stats;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use output::{CliError, Format, Report};

/// Exact Lüroth-map experiments: expansions, dimension certificates, pair
/// classification, chaos witnesses and Monte-Carlo statistics.
#[derive(Parser, Debug)]
#[command(name = "luroth-lab", version, about)]
struct Cli {
    /// Output format (default: csv for `stats`, plain otherwise).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the output to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<std::path::PathBuf>,
    /// Master seed for every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Digits of a rational under the Lüroth or Gauss map.
    Expand(expand::ExpandArgs),
    /// Moran roots, dimension certificates and box counts.
    Dim(dim::DimArgs),
    /// Orbit-distance statistics and distal or scrambled constructions.
    Pairs(pairs::PairsArgs),
    /// Devaney-chaos witnesses and their replay.
    Chaos(chaos::ChaosArgs),
    /// Digit law, shrinking-target hit counts.
    Stats(stats::StatsArgs),
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(value) = std::env::var("LUROTH_LAB_THREADS") {
        let n: usize = value
            .parse()
            .map_err(|_| CliError::Usage(format!("LUROTH_LAB_THREADS must be a positive integer, got {value:?}")))?;
        if n == 0 {
            return Err(CliError::Usage("LUROTH_LAB_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Report, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Expand(args) => expand::run(args),
        Command::Dim(args) => dim::run(args, cli.seed),
        Command::Pairs(args) => pairs::run(args, cli.seed),
        Command::Chaos(args) => chaos::run(args),
        Command::Stats(args) => stats::run(args, cli.seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default_format = match cli.command {
        Command::Stats(_) => Format::Csv,
        _ => Format::Plain,
    };
    let format = cli.format.unwrap_or(default_format);
    let path = cli.output.clone();
    match run(cli) {
        Ok(report) => match report.emit(format, path.as_deref()) {
            Ok(()) => report.exit_code(),
            Err(e) => {
                eprintln!("luroth-lab: {e}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("luroth-lab: {e}");
            e.exit_code()
        }
    }
}
