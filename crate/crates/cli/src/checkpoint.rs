//! Binary checkpoint persistence with a self-describing JSON header, little
//! endian 64-bit float tensors, and a trailing SHA-256 integrity checksum.
//!
//! Layout: `MAGIC | u32 version | u64 header_len | header JSON | tensor data
//! | 32-byte checksum of everything before it`. A structured-text sidecar
//! (`<path>.meta.json`) mirrors the header for quick inspection. Both files
//! are written atomically via a temp file followed by a rename.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

use wesnet_core::{AdamState, Mat, NetworkParams, Profile, ProfileKind};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

const MAGIC: &[u8; 10] = b"WESNETCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TensorMeta {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub params_version: u64,
    pub profile_kind: ProfileKind,
    pub keep_fraction: f64,
    pub tensors: Vec<TensorMeta>,
    pub adam: Option<AdamMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamMeta {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub params: NetworkParams,
    pub adam: Option<AdamState>,
}

fn tensor_list(params: &NetworkParams, adam: Option<&AdamState>) -> Vec<(TensorMeta, Vec<f64>)> {
    let mut out = Vec::new();
    let mut push = |name: String, shape: Vec<usize>, data: &[f64]| {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        out.push((TensorMeta { name, shape }, data.to_vec()));
    };
    for (q, l) in params.layers.iter().enumerate() {
        push(format!("layer{q}.w1"), vec![l.w1.rows(), l.w1.cols()], l.w1.data());
        push(format!("layer{q}.b1"), vec![l.b1.len()], &l.b1);
        push(format!("layer{q}.w2"), vec![l.w2.rows(), l.w2.cols()], l.w2.data());
        push(format!("layer{q}.b2"), vec![l.b2.len()], &l.b2);
        push(format!("layer{q}.w3"), vec![l.w3.rows(), l.w3.cols()], l.w3.data());
        push(format!("layer{q}.b3"), vec![l.b3.len()], &l.b3);
        push(format!("layer{q}.beta"), vec![l.beta.len()], &l.beta.values);
    }
    if let Some(state) = adam {
        for (q, m) in state.m.iter().enumerate() {
            push(format!("adam.m{q}"), vec![m.len()], m);
        }
        for (q, v) in state.v.iter().enumerate() {
            push(format!("adam.v{q}"), vec![v.len()], v);
        }
    }
    out
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        std::process::id()
    ));
    {
        let mut f = std::fs::File::create(&tmp).map_err(CliError::io(&tmp))?;
        f.write_all(bytes).map_err(CliError::io(&tmp))?;
        f.sync_all().map_err(CliError::io(&tmp))?;
    }
    std::fs::rename(&tmp, path).map_err(CliError::io(path))?;
    Ok(())
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

pub fn save_checkpoint(
    params: &NetworkParams,
    adam: Option<&AdamState>,
    cfg: &ExperimentConfig,
    path: &Path,
) -> Result<()> {
    let tensors = tensor_list(params, adam);
    let header = CheckpointHeader {
        format_version: FORMAT_VERSION,
        config: cfg.clone(),
        params_version: params.version,
        profile_kind: params.layers.first().map(|l| l.beta.kind).unwrap_or(ProfileKind::Linear),
        keep_fraction: cfg.keep_fraction,
        tensors: tensors.iter().map(|(m, _)| m.clone()).collect(),
        adam: adam.map(|s| AdamMeta { lr: s.lr, beta1: s.beta1, beta2: s.beta2, epsilon: s.epsilon, step: s.step }),
    };
    let header_json = serde_json::to_vec(&header).expect("header serializes");

    let mut bytes = Vec::new();
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(header_json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&header_json);
    for (_, data) in &tensors {
        for v in data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&bytes);
    bytes.extend_from_slice(&digest);

    atomic_write(path, &bytes)?;
    let sidecar = serde_json::to_vec_pretty(&header).expect("header serializes");
    atomic_write(&sidecar_path(path), &sidecar)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(CliError::io(path))?;
    if bytes.len() < MAGIC.len() + 4 + 8 + 32 {
        return Err(CliError::Corrupt(format!("{}: file too short", path.display())));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - 32);
    let digest = Sha256::digest(body);
    if digest.as_slice() != checksum {
        return Err(CliError::Corrupt(format!("{}: checksum mismatch", path.display())));
    }
    if &body[..MAGIC.len()] != MAGIC {
        return Err(CliError::Corrupt(format!("{}: bad magic", path.display())));
    }
    let mut off = MAGIC.len();
    let version = u32::from_le_bytes(body[off..off + 4].try_into().unwrap());
    off += 4;
    if version != FORMAT_VERSION {
        return Err(CliError::Version { found: version, supported: FORMAT_VERSION });
    }
    let header_len = u64::from_le_bytes(body[off..off + 8].try_into().unwrap()) as usize;
    off += 8;
    if body.len() < off + header_len {
        return Err(CliError::Corrupt(format!("{}: truncated header", path.display())));
    }
    let header: CheckpointHeader = serde_json::from_slice(&body[off..off + header_len])
        .map_err(|e| CliError::Corrupt(format!("{}: header: {e}", path.display())))?;
    off += header_len;

    let mut tensors = Vec::with_capacity(header.tensors.len());
    for meta in &header.tensors {
        let n = meta.shape.iter().product::<usize>();
        let end = off + n * 8;
        if body.len() < end {
            return Err(CliError::Corrupt(format!("{}: truncated tensor {}", path.display(), meta.name)));
        }
        let data: Vec<f64> = body[off..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push(data);
        off = end;
    }
    if off != body.len() {
        return Err(CliError::Corrupt(format!("{}: trailing bytes", path.display())));
    }

    rebuild(header, tensors)
}

fn rebuild(header: CheckpointHeader, mut tensors: Vec<Vec<f64>>) -> Result<Checkpoint> {
    // layer tensors come first (7 per layer), then adam.m* and adam.v*
    let per_layer = 7;
    let group = per_layer + if header.adam.is_some() { 2 } else { 0 };
    if header.tensors.is_empty() || header.tensors.len() % group != 0 {
        return Err(CliError::Corrupt("tensor count does not match layer structure".into()));
    }
    let n_layers = header.tensors.len() / group;
    header.config.net_config().map_err(|e| CliError::Corrupt(format!("embedded config: {e}")))?;
    let shape = |i: usize| &header.tensors[i].shape;
    let mut layers = Vec::with_capacity(n_layers);
    for q in 0..n_layers {
        let b = q * per_layer;
        let mut take = |i: usize| std::mem::take(&mut tensors[i]);
        let mat = |i: usize, data: Vec<f64>| Mat::from_rows(shape(i)[0], shape(i)[1], data);
        layers.push(wesnet_core::net::LayerParams {
            w1: mat(b, take(b)),
            b1: take(b + 1),
            w2: mat(b + 2, take(b + 2)),
            b2: take(b + 3),
            w3: mat(b + 4, take(b + 4)),
            b3: take(b + 5),
            beta: Profile {
                values: take(b + 6),
                kind: header.profile_kind,
                keep_fraction: header.keep_fraction,
            },
        });
    }
    let params = NetworkParams { layers, version: header.params_version };
    let adam = header.adam.as_ref().map(|meta| {
        let base = n_layers * per_layer;
        AdamState {
            lr: meta.lr,
            beta1: meta.beta1,
            beta2: meta.beta2,
            epsilon: meta.epsilon,
            step: meta.step,
            m: (0..n_layers).map(|q| std::mem::take(&mut tensors[base + q])).collect(),
            v: (0..n_layers).map(|q| std::mem::take(&mut tensors[base + n_layers + q])).collect(),
        }
    });
    Ok(Checkpoint { header, params, adam })
}
