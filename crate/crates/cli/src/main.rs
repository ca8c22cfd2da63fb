//! Command-line front end.

use std::path::PathBuf;
use std::process::ExitCode;

use bdflow::commands::{
    apply_overrides, cmd_inspect, cmd_regime, cmd_run, cmd_sweep, error_line, exit_code, Overrides,
};
use bdflow::io::read_config;
use bdflow::solver::Scheme;
use bdflow::{Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bdflow",
    version,
    about = "Radial compressible Navier-Stokes runs in mass coordinates"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration (run, sweep).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, replacing the config's output_dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of grid cells.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Final time.
    #[arg(long = "t-end", global = true, allow_negative_numbers = true)]
    t_end: Option<f64>,
    /// Time stepping scheme.
    #[arg(long, global = true, value_parser = ["explicit", "semi-implicit"])]
    scheme: Option<String>,
    /// Suppress the summary output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation.
    Run,
    /// Run the config's continuation sweep.
    Sweep,
    /// Classify an exponent tuple against the theorem hypotheses.
    Regime {
        n: u32,
        #[arg(allow_negative_numbers = true)]
        alpha: f64,
        #[arg(allow_negative_numbers = true)]
        gamma: f64,
        #[arg(allow_negative_numbers = true)]
        p: Option<f64>,
        /// Rational such as 5/3.
        q: Option<String>,
    },
    /// Summarise a snapshot file.
    Inspect { path: PathBuf },
}

fn load(common: &Common) -> Result<bdflow::io::RunConfig> {
    let path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::invalid("--config", "required for this command"))?;
    let mut config = read_config(path)?;
    let scheme = common
        .scheme
        .as_deref()
        .map(str::parse::<Scheme>)
        .transpose()?;
    apply_overrides(
        &mut config,
        &Overrides {
            out: common.out.clone(),
            grid: common.grid,
            t_end: common.t_end,
            scheme,
        },
    )?;
    Ok(config)
}

fn execute(cli: Cli) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    let quiet = cli.common.quiet;
    match cli.command {
        Command::Run => cmd_run(&load(&cli.common)?, &mut stdout, quiet).map(|_| ()),
        Command::Sweep => cmd_sweep(&load(&cli.common)?, &mut stdout, quiet).map(|_| ()),
        Command::Regime {
            n,
            alpha,
            gamma,
            p,
            q,
        } => cmd_regime(n, alpha, gamma, p, q.as_deref(), &mut stdout).map(|_| ()),
        Command::Inspect { path } => cmd_inspect(&path, &mut stdout).map(|_| ()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
