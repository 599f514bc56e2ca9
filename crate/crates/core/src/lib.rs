//! Core library for a MIMO-detection workbench built around a weight-scaled
//! deep-unfolded detector.
//!
//! The crate provides:
//! - a real-valued transmission model over BPSK/QAM4 ([`env`]),
//! - classical detectors: zero-forcing, MMSE, exact ML, and a semidefinite
//!   relaxation with ADMM ([`detectors`], [`sdr`]),
//! - monotone profile functions and the sparsity machinery that scales and
//!   prunes hidden units ([`profile`]),
//! - the unfolded network itself with manual backprop, Adam, and a
//!   deterministic training loop ([`net`]),
//! - exact closed-form complexity accounting alongside runtime MAC
//!   instrumentation ([`complexity`]),
//! - counter-based deterministic random streams for schedule-independent
//!   Monte-Carlo work ([`rng`]).

pub mod complexity;
pub mod detectors;
pub mod env;
pub mod error;
pub mod mat;
pub mod net;
pub mod profile;
pub mod rng;
pub mod sdr;

mod eigen;

pub use complexity::{
    detector_flops, mlp_forward_flops, table1_flops, wesnet_param_count, ComplexityReport,
    DetectorKind, Dims, FlopExtras, MacCounter, Rational,
};
pub use detectors::{ml_detect, mmse_detect, zf_detect, zf_soft, DetectorResult, ML_DIM_GUARD};
pub use eigen::{psd_project, sym_eigen, SymEigen};
pub use env::{
    bit_error_rate, generate_batch, hard_slice, noise_std_from_snr, realify_channel,
    BatchConfig, ChannelRealization, Constellation, TransmissionBatch,
};
pub use error::{Error, Result};
pub use mat::Mat;
pub use net::{
    adam_step, backward, detect, loss_regularized, loss_weighted, network_forward, train,
    warm_start_init, xavier_init, AdamState, ForwardTrace, Gradients, NetConfig, NetworkParams, TrainConfig,
    TrainResult,
};
pub use profile::{
    apply_profile, effective_profile, half_exp_profile, linear_profile, project_monotone_unit,
    KeepMask, Profile, ProfileKind,
};
pub use rng::RngStream;
pub use sdr::{sdr_detect, sdr_solve, SdrConfig, SdrSolution};
