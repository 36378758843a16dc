//! `stc`: synthetic data, pretraining, probing, benchmarking and symbolization.

mod commands;
mod dataset;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use exit::CliError;

#[derive(Parser)]
#[command(name = "stc", version, about = "Symbol-temporal consistency pretraining for multichannel time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Configuration shared by every command that trains or probes.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Key-value config file (`loss.tau = 0.2`); see `stc config` for every key.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key; repeatable, applied after --config.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Shorthand for `--set train.seed=S --set augment.seed=S`.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Shorthand for `--set train.epochs=N`.
    #[arg(long, value_name = "N")]
    epochs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate shifted synthetic subjects as `subject_<id>.csv` files.
    Synth {
        /// Output directory (created if missing).
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Number of subjects, numbered from 1.
        #[arg(long, default_value_t = 3)]
        subjects: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Windows per class and subject.
        #[arg(long, default_value_t = 60)]
        n_per_class: usize,
        /// Window length in samples (100 Hz).
        #[arg(long, default_value_t = 128)]
        length: usize,
        #[arg(long, default_value_t = 3)]
        channels: usize,
        /// Largest level shift between subjects.
        #[arg(long, default_value_t = 0.1)]
        shift: f64,
        /// Largest relative frequency warp.
        #[arg(long, default_value_t = 0.05)]
        warp: f64,
        /// Largest relative amplitude change.
        #[arg(long, default_value_t = 0.1)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.1)]
        noise_min: f64,
        #[arg(long, default_value_t = 0.15)]
        noise_max: f64,
    },
    /// Pretrain on one source subject; writes a checkpoint and a training log.
    Pretrain {
        /// PAMAP2 directory or a directory of `subject_<id>.csv` files.
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        #[arg(long, value_name = "ID")]
        source: u32,
        /// Checkpoint path.
        #[arg(long, value_name = "CKPT")]
        out: PathBuf,
        /// Training log CSV [default: CKPT with extension `log.csv`].
        #[arg(long, value_name = "CSV")]
        log: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Linear-probe accuracy of a checkpoint on a source/target pair.
    Probe {
        #[arg(long, value_name = "CKPT")]
        ckpt: PathBuf,
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        #[arg(long, value_name = "ID")]
        source: u32,
        #[arg(long, value_name = "ID")]
        target: u32,
        /// Probe features: `zt` or `zt-zs`.
        #[arg(long, default_value = "zt")]
        mode: String,
        /// Train the probe on `source` windows or on half of the `target` windows.
        #[arg(long, default_value = "source")]
        probe_on: String,
        /// Also write the result as CSV with the effective config.
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Every ordered source→target pair; writes results CSV and a text table.
    Benchmark {
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        /// Comma-separated subject ids [default: 1,2,5,6,8 for PAMAP2, all files otherwise].
        #[arg(long, value_delimiter = ',')]
        subjects: Option<Vec<u32>>,
        /// Results CSV; the table goes next to it with extension `txt`.
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        /// Also run the supervised MLP and logistic-regression baselines.
        #[arg(long)]
        baselines: bool,
        /// Probe features: `zt`, `zt-zs` or `both`.
        #[arg(long, default_value = "zt")]
        mode: String,
        #[arg(long, default_value = "source")]
        probe_on: String,
        /// Worker threads; results do not depend on it.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Normalized bag-of-symbols vectors for a dataset CSV.
    Symbolize {
        /// Dataset CSV as written by `stc synth`.
        #[arg(long, value_name = "CSV")]
        input: PathBuf,
        #[arg(long, default_value_t = 64)]
        n_symbols: usize,
        /// Channel stats CSV; read if it exists, otherwise fit on the input and written here.
        #[arg(long, value_name = "PATH")]
        stats: PathBuf,
        /// Output CSV [default: stdout].
        #[arg(long, value_name = "CSV")]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration.
    Config {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth {
            out,
            subjects,
            seed,
            n_per_class,
            length,
            channels,
            shift,
            warp,
            amplitude,
            noise_min,
            noise_max,
        } => commands::synth(&commands::SynthArgs {
            out,
            subjects,
            seed,
            n_per_class,
            length,
            channels,
            spread: stc_core::data::SubjectSpread {
                shift,
                warp,
                amplitude,
                noise_min,
                noise_max,
            },
        }),
        Command::Pretrain {
            data,
            source,
            out,
            log,
            config,
        } => commands::pretrain(&data, source, &out, log, &config),
        Command::Probe {
            ckpt,
            data,
            source,
            target,
            mode,
            probe_on,
            out,
            config,
        } => commands::probe(&ckpt, &data, source, target, &mode, &probe_on, out.as_deref(), &config),
        Command::Benchmark {
            data,
            subjects,
            out,
            baselines,
            mode,
            probe_on,
            jobs,
            config,
        } => commands::benchmark(&commands::BenchmarkArgs {
            data,
            subjects,
            out,
            baselines,
            mode,
            probe_on,
            jobs,
            config,
        }),
        Command::Symbolize {
            input,
            n_symbols,
            stats,
            out,
        } => commands::symbolize(&input, n_symbols, &stats, out.as_deref()),
        Command::Config { config } => {
            print!("{}", commands::load_config(&config)?.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("stc: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
