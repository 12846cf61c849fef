//! Checkpoint file format.
//!
//! ```text
//! "LMVA" | u16 version | u32 descriptor_len | descriptor JSON
//!        | f64 parameters (encoder layers, then decoder; weights then bias)
//!        | blocks: u8 tag | u32 len | payload
//! ```
//!
//! All integers and floats are little-endian. Block tag 1 holds the input
//! standardization (`dim` means, then `dim` stds) and is required. Tag 2 holds
//! fitted latent stats: `f64 k`, 8-byte model fingerprint, `d` means, `d` stds.

use std::path::Path;

use super::{ArchitectureDescriptor, Fingerprint, LayerSpec, VaeModel};
use crate::corpus::{PoseFrame, StandardizationStats};
use crate::error::{Error, Result};
use crate::latent_map::{map_frame, LatentStats, LatentVector};
use crate::nn::{DenseLayer, Network};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"LMVA";
pub const CHECKPOINT_VERSION: u16 = 1;

const TAG_STANDARDIZATION: u8 = 1;
const TAG_LATENT_STATS: u8 = 2;

/// A model plus, once fitted, its latent normalization stats.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: VaeModel,
    pub latent_stats: Option<LatentStats>,
}

impl Checkpoint {
    pub fn stats(&self) -> Result<&LatentStats> {
        self.latent_stats.as_ref().ok_or(Error::StatsNotFitted)
    }

    pub fn map_frame(&self, frame: &PoseFrame) -> Result<LatentVector> {
        map_frame(&self.model, self.stats()?, frame)
    }
}

pub fn save_checkpoint(
    model: &VaeModel,
    latent_stats: Option<&LatentStats>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = write_checkpoint(model, latent_stats)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes)
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn push_block(out: &mut Vec<u8>, tag: u8, payload: &[u8]) {
    out.push(tag);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
}

pub fn write_checkpoint(model: &VaeModel, latent_stats: Option<&LatentStats>) -> Result<Vec<u8>> {
    let mut out = CHECKPOINT_MAGIC.to_vec();
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let descriptor = serde_json::to_vec(&model.descriptor())?;
    out.extend_from_slice(&(descriptor.len() as u32).to_le_bytes());
    out.extend_from_slice(&descriptor);
    push_f64s(&mut out, &model.params());

    let s = model.standardization();
    let mut block = Vec::with_capacity(16 * s.dim());
    push_f64s(&mut block, &s.mean);
    push_f64s(&mut block, &s.std);
    push_block(&mut out, TAG_STANDARDIZATION, &block);

    if let Some(stats) = latent_stats {
        if stats.dim() != model.latent_dim() {
            return Err(Error::DimensionMismatch {
                context: "latent stats",
                expected: model.latent_dim(),
                got: stats.dim(),
            });
        }
        let mut block = Vec::new();
        block.extend_from_slice(&stats.k.to_le_bytes());
        block.extend_from_slice(&stats.model_fingerprint.0);
        push_f64s(&mut block, &stats.mean);
        push_f64s(&mut block, &stats.std);
        push_block(&mut out, TAG_LATENT_STATS, &block);
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncated {
                what,
                expected: n,
                found: self.bytes.len() - self.pos,
            }),
        }
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>> {
        let bytes = self.take(
            n.checked_mul(8).ok_or_else(|| corrupt("size overflow"))?,
            what,
        )?;
        Ok(bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect())
    }
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptCheckpoint(msg.into())
}

fn build_network(specs: &[LayerSpec], c: &mut Cursor<'_>) -> Result<Network> {
    let layers = specs
        .iter()
        .map(|s| {
            let weights = c.f64s(s.inputs * s.outputs, "checkpoint parameters")?;
            let bias = c.f64s(s.outputs, "checkpoint parameters")?;
            DenseLayer::new(s.inputs, s.outputs, weights, bias, s.activation)
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(layers)
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < 4 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic { expected: "LMVA" });
    }
    let mut c = Cursor { bytes, pos: 4 };
    let version = u16::from_le_bytes(c.take(2, "checkpoint version")?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch {
            expected: CHECKPOINT_VERSION,
            found: version,
        });
    }
    let desc_len = c.u32("descriptor length")? as usize;
    let descriptor: ArchitectureDescriptor =
        serde_json::from_slice(c.take(desc_len, "descriptor")?)
            .map_err(|e| corrupt(format!("descriptor: {e}")))?;
    let encoder = build_network(&descriptor.encoder, &mut c)?;
    let decoder = build_network(&descriptor.decoder, &mut c)?;

    let mut standardization = None;
    let mut latent_stats = None;
    while c.pos < bytes.len() {
        let tag = c.take(1, "block tag")?[0];
        let len = c.u32("block length")? as usize;
        let mut block = Cursor {
            bytes: c.take(len, "block payload")?,
            pos: 0,
        };
        match tag {
            TAG_STANDARDIZATION => {
                if !len.is_multiple_of(16) {
                    return Err(corrupt("standardization block length"));
                }
                let dim = len / 16;
                let mean = block.f64s(dim, "standardization")?;
                let std = block.f64s(dim, "standardization")?;
                standardization = Some(StandardizationStats::new(mean, std)?);
            }
            TAG_LATENT_STATS => {
                if len < 16 || !(len - 16).is_multiple_of(16) {
                    return Err(corrupt("latent stats block length"));
                }
                let dim = (len - 16) / 16;
                let k = f64::from_le_bytes(block.take(8, "latent stats")?.try_into().unwrap());
                let fp = Fingerprint(block.take(8, "latent stats")?.try_into().unwrap());
                let mean = block.f64s(dim, "latent stats")?;
                let std = block.f64s(dim, "latent stats")?;
                latent_stats = Some(LatentStats::new(mean, std, k, fp)?);
            }
            other => return Err(corrupt(format!("unknown block tag {other}"))),
        }
    }
    let standardization =
        standardization.ok_or_else(|| corrupt("missing standardization block"))?;
    let model = VaeModel::new(encoder, decoder, standardization)?;
    if model.descriptor() != descriptor {
        return Err(corrupt("descriptor does not match parameters"));
    }
    Ok(Checkpoint {
        model,
        latent_stats,
    })
}
