use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use posterior_bench::config::{RunConfig, SynthSpec, RUN_CONFIG_SCHEMA};
use posterior_bench::pipeline::{cmd_compare, cmd_fit, cmd_synth, render_ranking_text};
use posterior_bench::Error;

/// Bayesian posterior comparison of temperature series.
///
/// Log verbosity is read from POSTERIOR_BENCH_LOG (error, warn, info, debug,
/// trace); logs go to standard error, data only to files.
#[derive(Parser)]
#[command(name = "posterior-bench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every configured dataset and write summaries, plot data and a manifest
    Fit {
        /// JSON run config, or a manifest.json from an earlier run
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the number of Monte Carlo draws per dataset
        #[arg(long)]
        samples: Option<usize>,
        /// Override the credibility level
        #[arg(long)]
        level: Option<f64>,
        /// Worker threads (default: all cores); results do not depend on it
        #[arg(long)]
        workers: Option<usize>,
        /// Ignore unknown CSV columns
        #[arg(long)]
        lenient: bool,
    },
    /// Compare posterior bounds of every dataset in a manifest with a reference
    Compare {
        #[arg(long)]
        manifest: PathBuf,
        /// Reference label (default: the one recorded in the manifest)
        #[arg(long)]
        reference: Option<String>,
        /// Output directory (default: the manifest's directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write seeded synthetic time-series CSVs with known mean and variance
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "synth")]
        out: PathBuf,
    },
    /// Print the JSON Schema of the fit config
    Schema,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Fit {
            config,
            seed,
            out,
            samples,
            level,
            workers,
            lenient,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(s) = samples {
                cfg.num_samples = s;
            }
            if let Some(l) = level {
                cfg.level = l;
            }
            cfg.lenient |= lenient;
            let manifest = match workers {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
                    .install(|| cmd_fit(&cfg, &out))?,
                None => cmd_fit(&cfg, &out)?,
            };
            log::info!("manifest: {}", out.join("manifest.json").display());
            let _ = manifest;
        }
        Command::Compare {
            manifest,
            reference,
            out,
        } => {
            let report = cmd_compare(&manifest, reference.as_deref(), out.as_deref())?;
            log::info!("\n{}", render_ranking_text(&report));
        }
        Command::Synth { spec, out } => {
            let spec = SynthSpec::load(&spec)?;
            for path in cmd_synth(&spec, &out)? {
                log::info!("wrote {}", path.display());
            }
        }
        Command::Schema => print!("{RUN_CONFIG_SCHEMA}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POSTERIOR_BENCH_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
