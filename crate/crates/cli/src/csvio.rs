//! CSV artifacts with pinned column orders. Every file starts with a
//! `# config_hash=` comment line so results are traceable to their exact
//! configuration, and existing files are never replaced without `--overwrite`.
//!
//! Floats are written with Rust's round-trip `Display`, which never switches
//! to scientific notation, so small probabilities keep full decimal
//! precision.

use std::io::Write;
use std::path::Path;

use crate::error::{CliError, Result};
use crate::sweep::BerCurve;

pub const BER_HEADER: &str = "detector,snr_db,trials,bit_count,error_count,ber,ci95";
pub const COMPLEXITY_HEADER: &str = "detector,nt,layers,keep_fraction,analytic_flops,measured_macs,parameters";
pub const LOSS_HEADER: &str = "iteration,loss";

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub detector: String,
    pub nt: usize,
    pub layers: usize,
    pub keep_fraction: f64,
    pub analytic_flops: u64,
    pub measured_macs: u64,
    pub parameters: u64,
}

fn write_lines(path: &Path, lines: &[String], overwrite: bool) -> Result<()> {
    if path.exists() && !overwrite {
        return Err(CliError::Exists(path.to_path_buf()));
    }
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    let mut f = std::fs::File::create(path).map_err(CliError::io(path))?;
    for line in lines {
        // LF endings, UTF-8
        writeln!(f, "{line}").map_err(CliError::io(path))?;
    }
    Ok(())
}

pub fn write_ber_csv(path: &Path, config_hash: &str, curves: &[BerCurve], overwrite: bool) -> Result<()> {
    let mut lines = vec![format!("# config_hash={config_hash}"), BER_HEADER.to_string()];
    for curve in curves {
        for p in &curve.points {
            lines.push(format!(
                "{},{},{},{},{},{},{}",
                curve.detector, p.snr_db, p.trials, p.bit_count, p.error_count, p.ber, p.ci95
            ));
        }
    }
    write_lines(path, &lines, overwrite)
}

pub fn write_complexity_csv(path: &Path, config_hash: &str, rows: &[ComplexityRow], overwrite: bool) -> Result<()> {
    let mut lines = vec![format!("# config_hash={config_hash}"), COMPLEXITY_HEADER.to_string()];
    for r in rows {
        lines.push(format!(
            "{},{},{},{},{},{},{}",
            r.detector, r.nt, r.layers, r.keep_fraction, r.analytic_flops, r.measured_macs, r.parameters
        ));
    }
    write_lines(path, &lines, overwrite)
}

pub fn write_loss_csv(path: &Path, config_hash: &str, losses: &[f64], overwrite: bool) -> Result<()> {
    let mut lines = vec![format!("# config_hash={config_hash}"), LOSS_HEADER.to_string()];
    for (i, loss) in losses.iter().enumerate() {
        lines.push(format!("{i},{loss}"));
    }
    write_lines(path, &lines, overwrite)
}
