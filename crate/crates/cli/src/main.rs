use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use leray_cli::{run, Options, RunError};

#[derive(Parser)]
#[command(name = "leray", version, about = "Residue computations on CR manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task in a manifest.
    Run {
        manifest: PathBuf,
        /// Write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Numerical tolerance for verification tasks.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Gauss-Legendre nodes per cell dimension.
        #[arg(long = "quadrature-order")]
        quadrature_order: Option<usize>,
        /// Run tasks on separate threads.
        #[arg(long)]
        parallel: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        manifest,
        json,
        tolerance,
        quadrature_order,
        parallel,
    } = cli.command;
    if quadrature_order == Some(0) {
        eprintln!("error: --quadrature-order must be positive");
        return ExitCode::from(2);
    }
    let opts = Options {
        tolerance,
        order: quadrature_order,
        parallel,
    };
    let report = match run(&manifest, &opts) {
        Ok(r) => r,
        Err(RunError::Io(e)) => {
            eprintln!("error: {}: {}", manifest.display(), e);
            return ExitCode::from(2);
        }
        Err(RunError::Input(e)) if e.line == 0 => {
            eprintln!("error: {}: {}", manifest.display(), e);
            return ExitCode::from(2);
        }
        Err(RunError::Input(e)) => {
            eprintln!("error: {}:{}", manifest.display(), e);
            return ExitCode::from(2);
        }
    };
    print!("{}", report.table());
    if let Some(path) = json {
        if let Err(e) = std::fs::write(&path, report.to_json()) {
            eprintln!("error: {}: {}", path.display(), e);
            return ExitCode::from(2);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
