//! Orchestration of the five subcommands: train, eval, baselines, flops,
//! sweep. Each command writes its artifacts into `out_dir` and embeds the
//! config hash.

use std::path::PathBuf;

use wesnet_core::net::network_forward;
use wesnet_core::{
    detector_flops, train, wesnet_param_count, xavier_init, DetectorKind, FlopExtras,
    NetworkParams, RngStream, SdrConfig,
};

use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::config::ExperimentConfig;
use crate::csvio::{write_ber_csv, write_complexity_csv, write_loss_csv, ComplexityRow};
use crate::error::{CliError, Result};
use crate::sweep::{run_ber_sweep, SweepDetector, SweepSettings};

fn ensure_out_dir(cfg: &ExperimentConfig) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(CliError::io(&cfg.out_dir))
}

fn sweep_settings(cfg: &ExperimentConfig) -> SweepSettings {
    SweepSettings {
        nt: cfg.nt,
        nr: cfg.nr,
        constellation: cfg.modulation,
        snr_grid: cfg.snr_grid(),
        trials: cfg.trials as u64,
        master_seed: cfg.seed,
        threads: cfg.threads,
    }
}

fn sdr_config(cfg: &ExperimentConfig) -> SdrConfig {
    SdrConfig {
        admm_iterations: cfg.sdr_admm_iterations,
        rounding_samples: cfg.sdr_rounding_samples,
        ..Default::default()
    }
}

fn classical_detector(name: &str, cfg: &ExperimentConfig) -> Option<SweepDetector<'static>> {
    match name {
        "zf" => Some(SweepDetector::Zf),
        "mmse" => Some(SweepDetector::Mmse),
        "ml" => Some(SweepDetector::Ml),
        "sdr" => Some(SweepDetector::Sdr(sdr_config(cfg))),
        _ => None,
    }
}

fn eval_depth(cfg: &ExperimentConfig) -> usize {
    if cfg.truncate_layers == 0 { cfg.layers } else { cfg.layers - cfg.truncate_layers }
}

/// Trains per the config and writes a checkpoint plus a per-iteration loss
/// log. On divergence the last-good checkpoint is still written and the
/// divergence is propagated (exit code 3).
pub fn run_train(cfg: &ExperimentConfig, overwrite: bool) -> Result<PathBuf> {
    cfg.validate()?;
    ensure_out_dir(cfg)?;
    let net = cfg.net_config()?;
    let started = std::time::Instant::now();
    let result = train(&net, &cfg.train_config())?;
    let wall = started.elapsed();
    let ckpt_path = cfg.checkpoint_path();
    if ckpt_path.exists() && !overwrite {
        return Err(CliError::Exists(ckpt_path));
    }
    save_checkpoint(&result.params, None, cfg, &ckpt_path)?;
    write_loss_csv(&cfg.out_dir.join("train_loss.csv"), &cfg.hash(), &result.losses, overwrite)?;
    eprintln!(
        "trained {} iterations in {:.1}s; checkpoint at {}",
        result.losses.len(),
        wall.as_secs_f64(),
        ckpt_path.display()
    );
    if let Some(iter) = result.diverged_at {
        eprintln!("training diverged; last-good checkpoint written to {}", ckpt_path.display());
        return Err(CliError::Core(wesnet_core::Error::Diverged {
            iteration: iter,
            last_good: iter.saturating_sub(1),
        }));
    }
    Ok(ckpt_path)
}

/// Evaluates the checkpointed network over the SNR grid.
pub fn run_eval(cfg: &ExperimentConfig, overwrite: bool) -> Result<PathBuf> {
    cfg.validate()?;
    ensure_out_dir(cfg)?;
    let ckpt = load_checkpoint(&cfg.checkpoint_path())?;
    let net = ckpt.header.config.net_config()?;
    let depth = eval_depth(cfg);
    if depth == 0 || depth > net.layers {
        return Err(CliError::Config(format!("evaluation depth {depth} out of range")));
    }
    let name = if depth == net.layers { "wesnet".to_string() } else { format!("wesnet_l{depth}") };
    let dets = [SweepDetector::Learned { params: &ckpt.params, net: &net, layers: depth, name }];
    let curves = run_ber_sweep(&dets, &sweep_settings(cfg))?;
    let path = cfg.out_dir.join("ber_wesnet.csv");
    write_ber_csv(&path, &cfg.hash(), &curves, overwrite)?;
    Ok(path)
}

/// Sweeps the classical detectors named in the config.
pub fn run_baselines(cfg: &ExperimentConfig, overwrite: bool) -> Result<PathBuf> {
    cfg.validate()?;
    ensure_out_dir(cfg)?;
    let dets: Vec<SweepDetector<'static>> =
        cfg.detectors.iter().filter_map(|n| classical_detector(n, cfg)).collect();
    if dets.is_empty() {
        return Err(CliError::Config("no classical detectors selected".into()));
    }
    let curves = run_ber_sweep(&dets, &sweep_settings(cfg))?;
    let path = cfg.out_dir.join("ber_baselines.csv");
    write_ber_csv(&path, &cfg.hash(), &curves, overwrite)?;
    Ok(path)
}

/// Baselines plus the learned detector (when a checkpoint exists) in one file.
pub fn run_sweep(cfg: &ExperimentConfig, overwrite: bool) -> Result<PathBuf> {
    cfg.validate()?;
    ensure_out_dir(cfg)?;
    let wants_learned = cfg.detectors.iter().any(|d| d == "wesnet");
    let ckpt = if wants_learned { Some(load_checkpoint(&cfg.checkpoint_path())?) } else { None };
    let net = match &ckpt {
        Some(c) => Some(c.header.config.net_config()?),
        None => None,
    };
    let mut dets: Vec<SweepDetector<'_>> =
        cfg.detectors.iter().filter_map(|n| classical_detector(n, cfg)).collect();
    if let (Some(c), Some(n)) = (&ckpt, &net) {
        let depth = eval_depth(cfg).min(n.layers);
        let name = if depth == n.layers { "wesnet".to_string() } else { format!("wesnet_l{depth}") };
        dets.push(SweepDetector::Learned { params: &c.params, net: n, layers: depth, name });
    }
    let curves = run_ber_sweep(&dets, &sweep_settings(cfg))?;
    let path = cfg.out_dir.join("ber_sweep.csv");
    write_ber_csv(&path, &cfg.hash(), &curves, overwrite)?;
    Ok(path)
}

/// Measures one instrumented forward pass of the configured network.
fn measured_macs(cfg: &ExperimentConfig, params: &NetworkParams, depth: usize) -> Result<u64> {
    let net = cfg.net_config()?;
    let mut rng = RngStream::root(cfg.seed).child(77).rng();
    let ch = wesnet_core::env::draw_channel(&mut rng, cfg.nt, cfg.nr, cfg.modulation);
    let sym = wesnet_core::env::draw_symbols(&mut rng, net.d(), cfg.modulation);
    let y = ch.h_real.matvec(&sym);
    let trace = network_forward(params, &ch.h_real, &y, &net, depth, true)?;
    Ok(trace.macs.total())
}

/// Analytic FLOP counts plus instrumented MACs for the learned detectors.
pub fn run_flops(cfg: &ExperimentConfig, overwrite: bool) -> Result<PathBuf> {
    cfg.validate()?;
    ensure_out_dir(cfg)?;
    let net = cfg.net_config()?;
    // a checkpoint is used when present; otherwise fresh initialization (the
    // MAC count depends only on shapes and the mask, not on weight values)
    let params = match load_checkpoint(&cfg.checkpoint_path()) {
        Ok(c) => c.params,
        Err(_) => xavier_init(RngStream::root(cfg.seed).child(0), &net)?,
    };
    let mut rows = Vec::new();
    for name in &cfg.detectors {
        let nt = cfg.nt as u64;
        let constellation_size = match cfg.modulation {
            wesnet_core::Constellation::Bpsk => 2,
            wesnet_core::Constellation::Qam4 => 4,
        };
        let extras = FlopExtras {
            constellation_size: Some(constellation_size),
            n_iterations: Some(cfg.sdr_admm_iterations as u64),
            keep_fraction: Some(cfg.keep_fraction),
            layers: Some(cfg.layers as u64),
        };
        let (kind, layers, keep, macs, parameters) = match name.as_str() {
            "zf" => (DetectorKind::Zf, 0, 1.0, 0, 0),
            "mmse" => (DetectorKind::Mmse, 0, 1.0, 0, 0),
            "ml" => (DetectorKind::Ml, 0, 1.0, 0, 0),
            "sdr" => (DetectorKind::Sdr, 0, 1.0, 0, 0),
            "wesnet" => (
                DetectorKind::WeSNet,
                cfg.layers,
                cfg.keep_fraction,
                measured_macs(cfg, &params, cfg.layers)?,
                wesnet_param_count(net.d() as u64, cfg.layers as u64, net.beta_is_learnable()),
            ),
            "detnet" => (
                DetectorKind::DetNet,
                cfg.layers,
                1.0,
                0,
                wesnet_param_count(net.d() as u64, cfg.layers as u64, false),
            ),
            other => return Err(CliError::Config(format!("unknown detector {other:?}"))),
        };
        rows.push(ComplexityRow {
            detector: name.clone(),
            nt: cfg.nt,
            layers,
            keep_fraction: keep,
            analytic_flops: detector_flops(kind, nt, &extras)?,
            measured_macs: macs,
            parameters,
        });
    }
    let path = cfg.out_dir.join("complexity.csv");
    write_complexity_csv(&path, &cfg.hash(), &rows, overwrite)?;
    Ok(path)
}
