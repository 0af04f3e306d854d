use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lilrs::decoder::DecodeMode;
use lilrs::harness::{cmd_info, cmd_roundtrip, run_experiment, write_csv, Execution, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "lilrs", version, about = "Lifted interleaved linearized Reed-Solomon codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// TOML file with [field], [code] and [sweep] sections
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Print code parameters, rate, distance and decoding regions
    Info(ConfigArg),
    /// Trace a single encode, transmit, decode trial
    Roundtrip {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        gamma: usize,
        #[arg(long, default_value_t = 0)]
        delta: usize,
        /// Defaults to the config's sweep mode
        #[arg(long)]
        mode: Option<DecodeMode>,
    },
    /// Run the Monte Carlo sweep and write one CSV row per (gamma, delta)
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        /// 1 runs sequentially; 0 uses every core
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        mode: Option<DecodeMode>,
        /// Defaults to the config's output path, then stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stop a point once this many failures were seen
        #[arg(long)]
        stop_after_failures: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Info(c) => {
            let cfg = ExperimentConfig::from_path(&c.config)?;
            print!("{}", cmd_info(&cfg));
        }
        Command::Roundtrip { config, seed, gamma, delta, mode } => {
            let cfg = ExperimentConfig::from_path(&config.config)?;
            let mode = mode.unwrap_or(cfg.mode);
            print!("{}", cmd_roundtrip(&cfg, seed, gamma, delta, mode)?);
        }
        Command::Simulate { config, seed, trials, workers, mode, out, stop_after_failures } => {
            let mut cfg = ExperimentConfig::from_path(&config.config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t.max(1);
            }
            if let Some(w) = workers {
                cfg.workers = (w > 0).then_some(w);
            }
            if let Some(m) = mode {
                cfg.mode = m;
            }
            if stop_after_failures.is_some() {
                cfg.stop_after_failures = stop_after_failures;
            }
            let report = run_experiment(&cfg, Execution::from_workers(cfg.workers))?;
            match out.or(cfg.output.clone()) {
                Some(path) => {
                    let file = File::create(&path).map_err(|source| HarnessError::Io { path: path.clone(), source })?;
                    write_csv(&report, BufWriter::new(file))?;
                }
                None => write_csv(&report, io::stdout().lock())?,
            }
            let mut err = io::stderr().lock();
            for p in &report.points {
                let _ = writeln!(
                    err,
                    "({}, {}): {}/{} failures, bound {}",
                    p.gamma,
                    p.delta,
                    p.failures,
                    p.trials,
                    p.bound.map_or("NA".to_string(), |b| format!("{b:.3e}"))
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
