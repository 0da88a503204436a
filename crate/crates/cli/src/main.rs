use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use anilap_cli::config::EXPERIMENTS;
use anilap_cli::{load_config, run_file, RunOptions};

#[derive(Parser)]
#[command(name = "anilap", version, about = "Run experiments on anisotropic nonlocal operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (default: `output` from the config, else reports/<kind>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
    /// List the experiment kinds.
    ListExperiments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for (name, about) in EXPERIMENTS {
                println!("{name:<22} {about}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                println!("{}: ok ({})", config.display(), cfg.experiment.name());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(3)
            }
        },
        Command::Run { config, seed, jobs, out } => {
            if let Some(n) = jobs {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("cannot start {n} threads: {e}");
                    return ExitCode::from(3);
                }
            }
            let opts = RunOptions {
                seed,
                out,
                config_file: None,
            };
            match run_file(&config, &opts) {
                Ok(o) => {
                    let r = &o.report;
                    println!("{}: {:?}", r.experiment, r.verdict);
                    if let Some(reason) = &r.reason {
                        println!("  {reason}");
                    }
                    for m in &r.measurements {
                        println!("  {} = {}", m.name, m.value);
                    }
                    println!("  wrote {} files to {}", o.files.len(), o.dir.display());
                    ExitCode::from(o.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(3)
                }
            }
        }
    }
}
