//! `wesnet` command-line entry point.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wesnet_cli::commands::{run_baselines, run_eval, run_flops, run_sweep, run_train};
use wesnet_cli::config::ExperimentConfig;
use wesnet_cli::error::Result;

#[derive(Parser)]
#[command(name = "wesnet", about = "MIMO detection workbench: train, evaluate, and profile detectors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and write a checkpoint plus a loss log
    Train(CommonArgs),
    /// Evaluate a checkpointed network over the SNR grid
    Eval(CommonArgs),
    /// Sweep the classical baseline detectors
    Baselines(CommonArgs),
    /// Emit the complexity report (analytic FLOPs, measured MACs, parameters)
    Flops(CommonArgs),
    /// Sweep baselines and the learned detector together
    Sweep(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration file (TOML); flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    /// Modulation: bpsk or qam4
    #[arg(long = "mod")]
    modulation: Option<String>,
    #[arg(long)]
    layers: Option<usize>,
    /// Profile kind: linear, halfexp, or learnable
    #[arg(long)]
    profile: Option<String>,
    #[arg(long = "keep-frac")]
    keep_frac: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Trailing layers to drop at evaluation time
    #[arg(long = "truncate-layers")]
    truncate_layers: Option<usize>,
    #[arg(long = "snr-min")]
    snr_min: Option<f64>,
    #[arg(long = "snr-max")]
    snr_max: Option<f64>,
    #[arg(long = "snr-step")]
    snr_step: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for all artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace existing artifacts instead of refusing to clobber them
    #[arg(long)]
    overwrite: bool,
}

impl CommonArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! over {
            ($flag:ident, $field:ident) => {
                if let Some(v) = &self.$flag {
                    cfg.$field = v.clone();
                }
            };
        }
        over!(seed, seed);
        over!(nt, nt);
        over!(nr, nr);
        over!(layers, layers);
        over!(profile, profile);
        over!(keep_frac, keep_fraction);
        over!(lambda, lambda);
        over!(truncate_layers, truncate_layers);
        over!(snr_min, snr_min_db);
        over!(snr_max, snr_max_db);
        over!(snr_step, snr_step_db);
        over!(trials, trials);
        over!(threads, threads);
        over!(out, out_dir);
        if let Some(m) = &self.modulation {
            cfg.modulation = match m.as_str() {
                "bpsk" => wesnet_core::Constellation::Bpsk,
                "qam4" => wesnet_core::Constellation::Qam4,
                other => {
                    return Err(wesnet_cli::CliError::Config(format!(
                        "unknown modulation {other:?} (expected bpsk or qam4)"
                    )))
                }
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<PathBuf> {
    match &cli.command {
        Command::Train(a) => run_train(&a.resolve()?, a.overwrite),
        Command::Eval(a) => run_eval(&a.resolve()?, a.overwrite),
        Command::Baselines(a) => run_baselines(&a.resolve()?, a.overwrite),
        Command::Flops(a) => run_flops(&a.resolve()?, a.overwrite),
        Command::Sweep(a) => run_sweep(&a.resolve()?, a.overwrite),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
