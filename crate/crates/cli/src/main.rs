//! `hawkes-vol` command-line front end.

mod commands;
mod config;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Keys, Settings};
use error::CliError;
use io::Run;

#[derive(Debug, Parser)]
#[command(name = "hawkes-vol", version, about = "Tick-level Hawkes volatility pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat key=value config file; flags of the same name override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(flatten)]
    keys: Keys,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Quotes → up/down tick events on the sampling grid.
    Filter,
    /// Event CSV(s) → maximum-likelihood fit CSV.
    Fit,
    /// Fit CSV → closed-form daily volatility.
    Vol,
    /// Simulate one event path.
    Simulate,
    /// Closed-form variance against a Monte Carlo estimate.
    #[command(name = "mc-check")]
    McCheck,
    /// Time-rescaled residual Q-Q points and KS test.
    Residuals,
    /// Rolling intraday volatility through one session.
    Intraday,
    /// Realized volatility per session (and optional daily bars).
    Rv,
    /// Exceedances of |ΔP| over k·σ.
    Backtest,
    /// Coverage curve against the normal.
    Coverage,
    /// GJR-GARCH fit and rolling forecasts on daily returns.
    Garch,
    /// Combined GJR / Hawkes volatility weights.
    Combine,
    /// Futures→stock adjusted-R² surface.
    R2surface,
    /// Rolling AR(2) and futures-augmented forecasts.
    Forecast,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Filter => "filter",
            Command::Fit => "fit",
            Command::Vol => "vol",
            Command::Simulate => "simulate",
            Command::McCheck => "mc-check",
            Command::Residuals => "residuals",
            Command::Intraday => "intraday",
            Command::Rv => "rv",
            Command::Backtest => "backtest",
            Command::Coverage => "coverage",
            Command::Garch => "garch",
            Command::Combine => "combine",
            Command::R2surface => "r2surface",
            Command::Forecast => "forecast",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let settings = Settings::load(cli.config.as_deref(), &cli.keys)?;
    if let Some(jobs) = settings.get("jobs") {
        let n: usize = jobs
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Config(format!("jobs must be a positive integer, got '{jobs}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let run = Run::new(cli.command.name(), settings);
    match cli.command {
        Command::Filter => commands::filter(&run),
        Command::Fit => commands::fit(&run),
        Command::Vol => commands::vol(&run),
        Command::Simulate => commands::simulate_cmd(&run),
        Command::McCheck => commands::mc_check(&run),
        Command::Residuals => commands::residuals(&run),
        Command::Intraday => commands::intraday(&run),
        Command::Rv => commands::rv(&run),
        Command::Backtest => commands::backtest(&run),
        Command::Coverage => commands::coverage(&run),
        Command::Garch => commands::garch(&run),
        Command::Combine => commands::combine(&run),
        Command::R2surface => commands::r2surface(&run),
        Command::Forecast => commands::forecast(&run),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let err = CliError::Config(e.kind().to_string());
            let _ = e.print();
            eprintln!("{}", err.line());
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
