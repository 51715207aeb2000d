use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kelly_margin::cli::{self, CommandOutput};
use kelly_margin::config::{ConfigError, ScenarioConfig};
use kelly_margin::Error;

#[derive(Parser)]
#[command(name = "kelly-margin", version, about = "Nash-bargained margin loans for Kelly investors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file
    #[arg(long)]
    config: PathBuf,
    /// Write machine-readable CSV records here
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Negotiated contract for the configured threat point
    Solve(Common),
    /// Posted-price monopoly benchmark
    Monopoly(Common),
    /// Points on the efficient profit-growth frontier
    Frontier {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u64).range(1..))]
        grid: u64,
    },
    /// Kelly bets for annually compounded loan rates (percent)
    Table {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_percent)]
        rates: Vec<f64>,
    },
    /// Monte Carlo check of the negotiated contract
    Simulate(Common),
}

fn parse_percent(s: &str) -> Result<f64, String> {
    s.trim()
        .trim_end_matches('%')
        .parse::<f64>()
        .map_err(|e| format!("bad rate `{s}`: {e}"))
}

fn load(path: &PathBuf) -> Result<ScenarioConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Config(ConfigError {
            line: None,
            field: None,
            message: format!("cannot read {}: {e}", path.display()),
        })
    })?;
    Ok(ScenarioConfig::parse(&text)?)
}

fn run(command: Command) -> Result<(CommandOutput, Option<PathBuf>), Error> {
    let (common, output) = match command {
        Command::Solve(c) => {
            let out = cli::cmd_solve(&load(&c.config)?)?;
            (c, out)
        }
        Command::Monopoly(c) => {
            let out = cli::cmd_monopoly(&load(&c.config)?)?;
            (c, out)
        }
        Command::Frontier { common, grid } => {
            let out = cli::cmd_frontier(&load(&common.config)?, grid as usize)?;
            (common, out)
        }
        Command::Table { common, rates } => {
            let out = cli::cmd_table(&load(&common.config)?, &rates)?;
            (common, out)
        }
        Command::Simulate(c) => {
            let out = cli::cmd_simulate(&load(&c.config)?)?;
            (c, out)
        }
    };
    Ok((output, common.csv))
}

fn main() -> ExitCode {
    let args = Cli::parse();
    match run(args.command) {
        Ok((output, csv_path)) => {
            print!("{}", output.human);
            if let Some(path) = csv_path {
                if let Err(e) = fs::write(&path, &output.csv) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
