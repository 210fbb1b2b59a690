//! `PWFN1` checkpoints: magic, little-endian `u64` header length, JSON
//! header, then every parameter as little-endian `f32` in manifest order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig};
use crate::tensor::Tensor;
use crate::train::TrainConfig;

pub const MAGIC: &[u8; 5] = b"PWFN1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    /// Offset in scalars from the start of the payload.
    pub offset: usize,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    train: Option<TrainConfig>,
    iteration: u64,
    manifest: Vec<ManifestEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub train: Option<TrainConfig>,
    pub iteration: u64,
}

/// Errors when a parameter is not exactly representable in 32 bits, since
/// it would not survive the round trip.
pub fn encode_checkpoint(m: &Model, train: Option<&TrainConfig>, iteration: u64) -> Result<Vec<u8>> {
    let mut manifest = Vec::with_capacity(m.params.len());
    let mut payload = Vec::new();
    let mut offset = 0;
    for p in &m.params {
        manifest.push(ManifestEntry {
            name: p.name.clone(),
            offset,
            shape: p.value.shape().to_vec(),
        });
        offset += p.numel();
        for &v in p.value.data() {
            let f = v as f32;
            if f as f64 != v {
                return Err(Error::Contract(format!("{} holds a value not representable as f32", p.name)));
            }
            payload.extend_from_slice(&f.to_le_bytes());
        }
    }
    let header = serde_json::to_vec(&Header {
        model: m.cfg.clone(),
        train: train.cloned(),
        iteration,
        manifest,
    })?;
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn save_checkpoint(m: &Model, train: Option<&TrainConfig>, iteration: u64, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_checkpoint(m, train, iteration)?;
    fs::write(path, bytes)?;
    Ok(())
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    if bytes.len() < MAGIC.len() + 8 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::format(path, "not a PWFN1 checkpoint (bad magic)"));
    }
    let mut len = [0u8; 8];
    len.copy_from_slice(&bytes[5..13]);
    let hlen = u64::from_le_bytes(len) as usize;
    let body = &bytes[13..];
    if body.len() < hlen {
        return Err(Error::format(path, "truncated checkpoint header"));
    }
    let header: Header =
        serde_json::from_slice(&body[..hlen]).map_err(|e| Error::format(path, format!("bad header: {}", e)))?;
    let payload = &body[hlen..];

    let mut model = Model::build(&header.model)?;
    if header.manifest.len() != model.params.len() {
        return Err(Error::Architecture(format!(
            "manifest lists {} tensors, architecture has {}",
            header.manifest.len(),
            model.params.len()
        )));
    }
    let mut expect = 0;
    for (e, p) in header.manifest.iter().zip(&model.params) {
        if e.name != p.name || e.shape != p.value.shape() || e.offset != expect {
            return Err(Error::Architecture(format!(
                "manifest entry {} {:?} @{} does not match {} {:?} @{}",
                e.name,
                e.shape,
                e.offset,
                p.name,
                p.value.shape(),
                expect
            )));
        }
        expect += p.numel();
    }
    if payload.len() != expect * 4 {
        return Err(Error::format(
            path,
            format!("payload holds {} bytes, manifest needs {}", payload.len(), expect * 4),
        ));
    }
    let mut floats = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64);
    for p in &mut model.params {
        let data: Vec<f64> = floats.by_ref().take(p.numel()).collect();
        p.value = Tensor::new(p.value.shape(), data)?;
        p.value.ensure_finite(&p.name)?;
    }
    Ok(Checkpoint {
        model,
        train: header.train,
        iteration: header.iteration,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::format(path, e.to_string()))?;
    decode_checkpoint(&bytes, path)
}

/// Loads and insists the stored architecture equals `expected`.
pub fn load_checkpoint_for(path: impl AsRef<Path>, expected: &ModelConfig) -> Result<Checkpoint> {
    let ck = load_checkpoint(path)?;
    if &ck.model.cfg != expected {
        return Err(Error::Architecture(format!(
            "checkpoint holds {:?}, expected {:?}",
            ck.model.cfg, expected
        )));
    }
    Ok(ck)
}
