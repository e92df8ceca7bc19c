use std::path::PathBuf;
use std::process::ExitCode;

use atlas_cli::config::{load_config, RunConfig};
use atlas_cli::{generate, run, CliError};
use bayes_atlas::synthetic::{ShapeFamily, SyntheticSpec};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bayes-atlas", version, about = "Atlas building with per-subject smoothness")]
struct Cli {
    /// More log output (-v debug, -vv trace). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic population and its ground truth.
    Generate {
        #[arg(long)]
        out: PathBuf,
        /// bullseye or blob
        #[arg(long, default_value = "bullseye")]
        family: String,
        #[arg(long, default_value_t = 10)]
        subjects: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [64, 64])]
        dims: Vec<usize>,
        /// Scale of the prior velocity draws.
        #[arg(long, default_value_t = 0.15)]
        magnitude: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Standard deviation of additive intensity noise.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Odd frequency extent per axis.
        #[arg(long, default_value_t = 15)]
        lattice: usize,
    },
    /// Estimate an atlas as described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Load and check config and dataset, then stop.
        #[arg(long)]
        dry_run: bool,
        /// Override a config key, e.g. --set hmc.samples=20 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print a config with every default filled in.
    Config {
        #[arg(long, default_value = "data")]
        dataset: String,
        #[arg(long, default_value = "out")]
        output: String,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate {
            out,
            family,
            subjects,
            dims,
            magnitude,
            seed,
            noise,
            lattice,
        } => {
            let spec = SyntheticSpec {
                family: family.parse::<ShapeFamily>()?,
                dims,
                subjects,
                magnitude,
                seed,
                lattice_extent: lattice,
                noise,
                ..SyntheticSpec::default()
            };
            generate::generate(&out, &spec)?;
            println!("wrote {subjects} subjects to {}", out.display());
        }
        Command::Run {
            config,
            dry_run,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            if dry_run {
                let p = run::prepare(&cfg)?;
                println!("ok: {}", run::describe(&cfg, &p));
                return Ok(());
            }
            let s = run::run(&cfg)?;
            println!(
                "{} iterations ({}), {} files in {}",
                s.iterations,
                if s.converged { "converged" } else { "iteration limit" },
                s.files,
                s.output.display()
            );
        }
        Command::Config { dataset, output } => {
            print!("{}", RunConfig::template(&dataset, &output).to_toml());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
