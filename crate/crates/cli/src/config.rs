//! Flat, human-editable experiment configuration. Field names in the TOML
//! file are exactly the struct field names; unknown keys are a hard error so
//! a typo can never silently fall back to a default.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use wesnet_core::{Constellation, NetConfig, ProfileKind, TrainConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    // antenna/model geometry
    pub nt: usize,
    pub nr: usize,
    pub modulation: Constellation,
    pub layers: usize,
    pub profile: String,
    pub keep_fraction: f64,
    pub lambda: f64,
    pub reg_start_layer: usize,
    pub input_profile_mode: bool,
    // training
    pub iterations: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub train_snr_lo_db: f64,
    pub train_snr_hi_db: f64,
    pub seed: u64,
    // evaluation
    pub snr_min_db: f64,
    pub snr_max_db: f64,
    pub snr_step_db: f64,
    pub trials: usize,
    pub monte_carlo_rounds: usize,
    pub detectors: Vec<String>,
    pub truncate_layers: usize,
    pub sdr_admm_iterations: usize,
    pub sdr_rounding_samples: usize,
    // execution and artifacts
    pub threads: usize,
    pub out_dir: PathBuf,
    pub checkpoint: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            nt: 4,
            nr: 8,
            modulation: Constellation::Bpsk,
            layers: 12,
            profile: "halfexp".into(),
            keep_fraction: 1.0,
            lambda: 1e-3,
            reg_start_layer: 1,
            input_profile_mode: false,
            iterations: 2000,
            batch: 500,
            learning_rate: 1e-3,
            train_snr_lo_db: 8.0,
            train_snr_hi_db: 14.0,
            seed: 0,
            snr_min_db: 0.0,
            snr_max_db: 15.0,
            snr_step_db: 1.0,
            trials: 10_000,
            monte_carlo_rounds: 200,
            detectors: vec!["zf".into(), "mmse".into()],
            truncate_layers: 0,
            sdr_admm_iterations: 200,
            sdr_rounding_samples: 100,
            threads: 1,
            out_dir: PathBuf::from("out"),
            checkpoint: PathBuf::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    pub fn profile_kind(&self) -> Result<ProfileKind> {
        match self.profile.as_str() {
            "linear" => Ok(ProfileKind::Linear),
            "halfexp" => Ok(ProfileKind::HalfExponential),
            "learnable" => Ok(ProfileKind::Learnable),
            other => Err(CliError::Config(format!(
                "unknown profile {other:?} (expected linear, halfexp, or learnable)"
            ))),
        }
    }

    pub fn net_config(&self) -> Result<NetConfig> {
        let mut net = NetConfig::new(self.nt, self.nr, self.modulation);
        net.layers = self.layers;
        net.profile_kind = self.profile_kind()?;
        net.learnable_beta = matches!(net.profile_kind, ProfileKind::Learnable);
        net.keep_fraction = self.keep_fraction;
        net.lambda = self.lambda;
        net.reg_start_layer = self.reg_start_layer;
        net.input_profile_mode = self.input_profile_mode;
        net.validate()?;
        Ok(net)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            iterations: self.iterations,
            batch: self.batch,
            snr_lo_db: self.train_snr_lo_db,
            snr_hi_db: self.train_snr_hi_db,
            learning_rate: self.learning_rate,
            seed: self.seed,
            fixed_channel: false,
        }
    }

    /// Ascending SNR grid from min to max inclusive (within half a step).
    pub fn snr_grid(&self) -> Vec<f64> {
        let mut grid = Vec::new();
        let mut i = 0usize;
        loop {
            let v = self.snr_min_db + i as f64 * self.snr_step_db;
            if v > self.snr_max_db + 0.5 * self.snr_step_db {
                break;
            }
            grid.push(v);
            i += 1;
        }
        grid
    }

    /// Path of the checkpoint artifact (defaults into `out_dir`).
    pub fn checkpoint_path(&self) -> PathBuf {
        if self.checkpoint.as_os_str().is_empty() {
            self.out_dir.join("checkpoint.bin")
        } else {
            self.checkpoint.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.net_config()?;
        if self.trials == 0 {
            return Err(CliError::Config("trials must be ≥ 1".into()));
        }
        if self.snr_step_db <= 0.0 || self.snr_max_db < self.snr_min_db {
            return Err(CliError::Config("snr grid must be ascending with a positive step".into()));
        }
        if self.monte_carlo_rounds == 0 {
            return Err(CliError::Config("monte_carlo_rounds must be ≥ 1".into()));
        }
        if self.truncate_layers > self.layers {
            return Err(CliError::Config(format!(
                "truncate_layers {} exceeds layers {}",
                self.truncate_layers, self.layers
            )));
        }
        for d in &self.detectors {
            if !matches!(d.as_str(), "zf" | "mmse" | "ml" | "sdr" | "wesnet" | "detnet") {
                return Err(CliError::Config(format!("unknown detector {d:?}")));
            }
        }
        self.profile_kind()?;
        Ok(())
    }

    /// Hash of the canonical serialization; embedded in every artifact so
    /// files can be traced back to the exact configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..16])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<ExperimentConfig>("ntt = 4").unwrap_err();
        assert!(err.to_string().contains("ntt"));
    }

    #[test]
    fn hash_changes_iff_a_field_changes() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.lambda = 2e-3;
        assert_ne!(a.hash(), b.hash());
        b.lambda = a.lambda;
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn snr_grid_is_inclusive_and_ascending() {
        let mut cfg = ExperimentConfig::default();
        cfg.snr_min_db = 0.0;
        cfg.snr_max_db = 15.0;
        cfg.snr_step_db = 1.0;
        let grid = cfg.snr_grid();
        assert_eq!(grid.len(), 16);
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid[15], 15.0);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
