use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qergodic::runner::{run, RunOptions};

#[derive(Parser)]
#[command(name = "qergodic", version, about = "Experiment runner for ergodic sequences of quantum channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Output directory; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `driver.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; outputs do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed, threads } => match run(&config, &RunOptions { out, seed, threads }) {
            Ok(dir) => {
                println!("wrote {}", dir.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
