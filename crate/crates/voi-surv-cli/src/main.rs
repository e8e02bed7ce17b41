//! Command-line front end for the value-of-information library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use voi_surv::config::ScenarioConfig;
use voi_surv::error::{Error, Result};

use voi_surv_cli::commands::{self, Method};
use voi_surv_cli::report::ResultsDoc;

/// Value of extending follow-up in an ongoing two-arm survival trial.
#[derive(Parser)]
#[command(name = "voi-surv", version, about)]
struct Cli {
    /// Worker threads; 0 or absent uses all cores. Falls back to the
    /// VOI_SURV_THREADS environment variable. Outputs are identical for
    /// any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic dataset a scenario describes as CSV.
    Generate {
        /// Scenario JSON.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for dataset.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit every configured family to a dataset and report the comparison.
    Fit {
        /// Scenario JSON naming the families and horizon.
        #[arg(long)]
        config: PathBuf,
        /// Dataset CSV; omitted regenerates it from the scenario.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Output directory for fit.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Estimate the value of each candidate follow-up extension.
    Evsi {
        /// Scenario JSON.
        #[arg(long)]
        config: PathBuf,
        /// Dataset CSV; omitted regenerates it from the scenario.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Which estimator to run.
        #[arg(long, value_enum, default_value = "gam")]
        method: Method,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for results.json and curve CSVs.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Run the nested estimator even above the configured budget.
        #[arg(long)]
        force: bool,
    },
    /// Turn a results document into stopping curves and crossings.
    Enbs {
        /// results.json from an evsi run.
        #[arg(long)]
        results: PathBuf,
        /// Optional scenario JSON whose cost inputs replace the ones
        /// embedded in the results document.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for enbs_curve.csv and crossings.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Pin the global worker pool when a thread count was requested.
fn init_threads(flag: Option<usize>) {
    let count = flag.or_else(|| {
        std::env::var("VOI_SURV_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = count {
        if n > 0 {
            // Failure means a pool already exists, which keeps the run
            // valid; results do not depend on the thread count.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate { config, out } => {
            let config = ScenarioConfig::from_path(config)?;
            let path = commands::cmd_generate(&config, &out)?;
            println!("wrote {} (seed {})", path.display(), config.seed);
        }
        Command::Fit {
            config,
            dataset,
            out,
        } => {
            let config = ScenarioConfig::from_path(config)?;
            let data = commands::dataset_for(&config, dataset.as_deref())?;
            let path = commands::cmd_fit(&config, &data, &out)?;
            println!("wrote {} (seed {})", path.display(), config.seed);
        }
        Command::Evsi {
            config,
            dataset,
            method,
            seed,
            out,
            force,
        } => {
            let mut config = ScenarioConfig::from_path(config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let data = commands::dataset_for(&config, dataset.as_deref())?;
            for path in commands::cmd_evsi(&config, &data, method, force, &out)? {
                println!("wrote {} (seed {})", path.display(), config.seed);
            }
        }
        Command::Enbs {
            results,
            config,
            out,
        } => {
            let doc = ResultsDoc::from_path(results)?;
            let override_inputs = match config {
                Some(path) => {
                    let config = ScenarioConfig::from_path(path)?;
                    Some(config.enbs.ok_or_else(|| {
                        Error::invalid("the override scenario has no enbs block")
                    })?)
                }
                None => None,
            };
            for path in commands::cmd_enbs(&doc, override_inputs.as_ref(), &out)? {
                println!("wrote {} (seed {})", path.display(), doc.seed);
            }
        }
    }
    Ok(())
}

/// Exit codes: 2 config, 3 data, 4 numeric.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Invalid(_) => 2,
        Error::Data(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => 3,
        Error::Numeric(_) => 4,
    }
}
