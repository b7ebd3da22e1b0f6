use std::path::PathBuf;
use std::process::ExitCode;

use ceic::runner::{compare_files, run_file, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "ceic", about = "Run CEIC/EIC balance-control scenarios")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Output directory (overrides the scenario's output.dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the randomized condition checks
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Integration step override (s)
    #[arg(long, global = true)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one scenario and write its artifacts
    Run { file: PathBuf },
    /// Simulate two scenarios that share system and reference
    Compare { a: PathBuf, b: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = RunOptions { seed: cli.seed, dt: cli.dt };
    let (code, text) = match &cli.cmd {
        Cmd::Run { file } => {
            let (code, dir, text) = run_file(file, cli.out.as_deref(), &opts);
            if let Some(d) = dir {
                eprintln!("artifacts in {}", d.display());
            }
            (code, text)
        }
        Cmd::Compare { a, b } => compare_files(a, b, cli.out.as_deref(), &opts),
    };
    if code == 1 {
        eprintln!("error: {text}");
    } else {
        print!("{text}");
    }
    ExitCode::from(code as u8)
}
