use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hallmhd::io::{
    cmd_convergence, cmd_oracle, cmd_poisson_check, cmd_predict, cmd_run, output_dir, parse_config, Outcome,
};
use hallmhd::Error;

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Axisymmetric Hall-MHD blow-up laboratory.
///
/// Exit status: 0 when the command's check passes, 1 when it fails, 2 for
/// configuration or usage errors and 3 for runtime failures. The environment
/// variable HALLMHD_THREADS caps kernel parallelism (0 = all cores).
#[derive(Parser)]
#[command(name = "hallmhd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured data and write series, snapshots and a report.
    Run(Common),
    /// Manufactured-solution convergence table for the stream-function solver.
    PoissonCheck(Common),
    /// Compare the decoupled system against the exact 1-D Burgers solution.
    Oracle(Common),
    /// Full-system refinement study at a pre-steepening time.
    Convergence(Common),
    /// Theorem constants and blow-up time bounds for the configured data.
    Predict(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides [output] directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Subdirectory of the output directory for this invocation.
    #[arg(long)]
    seed_label: Option<String>,
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("HALLMHD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| format!("HALLMHD_THREADS must be a nonnegative integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn print(outcome: &Outcome) {
    // a closed pipe (e.g. `| head`) is not an error worth reporting
    let mut out = std::io::stdout().lock();
    let _ = write!(out, "{}", outcome.report.render());
    let _ = writeln!(out, "output: {}", outcome.dir.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let (Command::Run(c) | Command::PoissonCheck(c) | Command::Oracle(c) | Command::Convergence(c) | Command::Predict(c)) =
        &cli.command;
    let cfg = match parse_config(&c.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    if let Some(label) = &c.seed_label {
        if label.is_empty() || label.contains(['/', '\\']) || label == "." || label == ".." {
            eprintln!("error: --seed-label must be a plain directory name, got `{label}`");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let dir = output_dir(&cfg, c.out.as_deref(), c.seed_label.as_deref());
    let result = match &cli.command {
        Command::Run(_) => cmd_run(&cfg, &dir).map(|(o, _)| o),
        Command::PoissonCheck(_) => cmd_poisson_check(&cfg, &dir),
        Command::Oracle(_) => cmd_oracle(&cfg, &dir),
        Command::Convergence(_) => cmd_convergence(&cfg, &dir),
        Command::Predict(_) => cmd_predict(&cfg, &dir),
    };
    match result {
        Ok(outcome) => {
            print(&outcome);
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Data(_) | Error::Grid(_) => ExitCode::from(EXIT_USAGE),
                _ => ExitCode::from(EXIT_RUNTIME),
            }
        }
    }
}
