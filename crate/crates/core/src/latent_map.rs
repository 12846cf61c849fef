//! The latent mapping: encoder means normalized per component to `[0, 1]`.
//!
//! Each component is mapped linearly from the window `m ± k·s` (corpus mean
//! and standard deviation of that component's encoder means) onto `[0, 1]`,
//! clipping outside the window.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, PoseFrame};
use crate::error::{Error, Result};
use crate::vae::{Fingerprint, VaeModel};

pub const LATENT_STD_FLOOR: f64 = 1e-9;
pub const DEFAULT_K: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Half-width of the normalization window in standard deviations.
    pub k: f64,
    pub model_fingerprint: Fingerprint,
}

impl LatentStats {
    pub fn new(
        mean: Vec<f64>,
        std: Vec<f64>,
        k: f64,
        model_fingerprint: Fingerprint,
    ) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::DimensionMismatch {
                context: "latent stats",
                expected: mean.len(),
                got: std.len(),
            });
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::InvalidConfig(format!("k must be positive, got {k}")));
        }
        if mean.iter().chain(&std).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("latent stats"));
        }
        if std.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidConfig(
                "latent std must be strictly positive".into(),
            ));
        }
        Ok(Self {
            mean,
            std,
            k,
            model_fingerprint,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Same stats with a different window half-width.
    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(
            self.mean.clone(),
            self.std.clone(),
            k,
            self.model_fingerprint,
        )
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: LatentStats = serde_json::from_str(&text)?;
        Self::new(raw.mean, raw.std, raw.k, raw.model_fingerprint)
    }
}

/// A normalized control vector; every component lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentVector(Vec<f64>);

impl LatentVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Single-precision copy, as sent on the wire.
    pub fn to_f32(&self) -> Vec<f32> {
        self.0.iter().map(|&v| v as f32).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Encodes every frame and records the per-component mean and population
/// standard deviation of the encoder means.
pub fn fit_latent_stats(model: &VaeModel, corpus: &Corpus, k: f64) -> Result<LatentStats> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let means: Vec<Vec<f64>> = corpus
        .frames()
        .par_iter()
        .map(|f| model.encode(f).map(|c| c.means))
        .collect::<Result<_>>()?;
    let (mean, std) = component_stats(&means);
    LatentStats::new(mean, std, k, model.fingerprint())
}

/// Per-component mean and floored population std.
pub fn component_stats(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = rows.first().map_or(0, Vec::len);
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in rows {
        for ((acc, v), m) in var.iter_mut().zip(r).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let std = var
        .into_iter()
        .map(|v| (v / n).sqrt().max(LATENT_STD_FLOOR))
        .collect();
    (mean, std)
}

/// `clip((μ − (m − k·s)) / (2·k·s), 0, 1)` per component.
pub fn normalize_latent(means: &[f64], stats: &LatentStats) -> Result<LatentVector> {
    if means.len() != stats.dim() {
        return Err(Error::DimensionMismatch {
            context: "normalize_latent",
            expected: stats.dim(),
            got: means.len(),
        });
    }
    let k = stats.k;
    Ok(LatentVector(
        means
            .iter()
            .zip(stats.mean.iter().zip(&stats.std))
            .map(|(mu, (m, s))| ((mu - (m - k * s)) / (2.0 * k * s)).clamp(0.0, 1.0))
            .collect(),
    ))
}

fn check_pairing(model: &VaeModel, stats: &LatentStats) -> Result<()> {
    if stats.model_fingerprint != model.fingerprint() {
        return Err(Error::FingerprintMismatch {
            stats: stats.model_fingerprint.to_string(),
            model: model.fingerprint().to_string(),
        });
    }
    if stats.dim() != model.latent_dim() {
        return Err(Error::DimensionMismatch {
            context: "latent stats",
            expected: model.latent_dim(),
            got: stats.dim(),
        });
    }
    Ok(())
}

/// The mapping: pose frame to normalized control vector.
pub fn map_frame(model: &VaeModel, stats: &LatentStats, frame: &PoseFrame) -> Result<LatentVector> {
    check_pairing(model, stats)?;
    normalize_latent(&model.encode(frame)?.means, stats)
}

/// The mapping applied to an already standardized input vector.
pub fn map_standardized(model: &VaeModel, stats: &LatentStats, x: &[f64]) -> Result<LatentVector> {
    check_pairing(model, stats)?;
    normalize_latent(&model.encode_standardized(x)?.means, stats)
}
