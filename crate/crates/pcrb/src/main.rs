use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pcrb::properties::suite_failures;
use pcrb::{run_experiment, Experiment, ExperimentConfig, RunError};

#[derive(Parser)]
#[command(name = "pcrb", version, about = "Posterior CRB experiments for prior-aware MIMO radar transmit design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment in a config and write its CSV table.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to all cores.
        #[arg(long, env = "PCRB_THREADS")]
        threads: Option<usize>,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_PROPERTY: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(c) => {
                println!("{}: ok ({})", config.display(), c.experiment.kind());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}: {e}", config.display());
                ExitCode::from(EXIT_CONFIG)
            }
        },
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            if let Some(s) = seed {
                cfg.experiment.set_seed(s);
            }
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.unwrap_or(0)).build();
            let pool = match pool {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("cannot start thread pool: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            match pool.install(|| execute(&cfg, &out)) {
                Ok(code) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_CONFIG)
                }
            }
        }
    }
}

fn execute(cfg: &ExperimentConfig, out: &PathBuf) -> Result<ExitCode, RunError> {
    let table = run_experiment(cfg)?;
    let file = BufWriter::new(File::create(out)?);
    table.write_csv(file)?;
    eprintln!("wrote {} rows to {}", table.rows.len(), out.display());
    if matches!(cfg.experiment, Experiment::PropertySuite { .. }) {
        let failures = suite_failures(&table);
        if failures > 0 {
            eprintln!("{failures} property failures");
            return Ok(ExitCode::from(EXIT_PROPERTY));
        }
    }
    Ok(ExitCode::SUCCESS)
}
