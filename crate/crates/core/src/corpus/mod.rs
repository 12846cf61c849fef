//! Pose-frame corpora: the in-memory representation, file formats, a
//! synthetic movement generator, and per-dimension standardization.

mod io;
mod synth;

pub use io::{load_corpus, load_corpus_with, save_corpus, LoadOptions, CORPUS_MAGIC};
pub use synth::{generate_synthetic, SynthConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of skeletal joints delivered by the sensor.
pub const JOINT_COUNT: usize = 25;

/// Dimension of one pose frame (25 joints × xyz).
pub const POSE_DIM: usize = JOINT_COUNT * 3;

/// Floor applied to per-dimension standard deviations.
pub const STD_FLOOR: f64 = 1e-6;

/// One skeletal sample. Coordinates are in metres, sensor space.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseFrame {
    values: Vec<f32>,
    timestamp: f64,
}

impl PoseFrame {
    /// A 75-value pose frame.
    pub fn new(values: Vec<f32>, timestamp: f64) -> Result<Self> {
        if values.len() != POSE_DIM {
            return Err(Error::DimensionMismatch {
                context: "pose frame",
                expected: POSE_DIM,
                got: values.len(),
            });
        }
        Self::with_any_dim(values, timestamp)
    }

    /// A frame of arbitrary (non-zero) dimension, for corpora loaded with the
    /// dimension override.
    pub fn with_any_dim(values: Vec<f32>, timestamp: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "pose frame",
                expected: POSE_DIM,
                got: 0,
            });
        }
        if !timestamp.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("pose frame"));
        }
        Ok(Self { values, timestamp })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn timestamp(&self) -> f64 {
        self.timestamp
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// An ordered sequence of pose frames with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    frames: Vec<PoseFrame>,
    frame_rate_hz: f64,
    source_label: String,
}

impl Corpus {
    pub fn new(
        frames: Vec<PoseFrame>,
        frame_rate_hz: f64,
        source_label: impl Into<String>,
    ) -> Result<Self> {
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "frame rate must be positive, got {frame_rate_hz}"
            )));
        }
        if let Some(first) = frames.first() {
            let dim = first.dim();
            for (i, f) in frames.iter().enumerate() {
                if f.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        context: "corpus frame",
                        expected: dim,
                        got: f.dim(),
                    });
                }
                if i > 0 && f.timestamp <= frames[i - 1].timestamp {
                    return Err(Error::NonMonotonicTimestamps { index: i });
                }
            }
        }
        Ok(Self {
            frames,
            frame_rate_hz,
            source_label: source_label.into(),
        })
    }

    /// Builds a corpus from raw value rows, synthesizing timestamps from the
    /// frame rate.
    pub fn from_rows(
        rows: Vec<Vec<f32>>,
        frame_rate_hz: f64,
        source_label: impl Into<String>,
    ) -> Result<Self> {
        let frames = rows
            .into_iter()
            .enumerate()
            .map(|(i, v)| PoseFrame::with_any_dim(v, i as f64 / frame_rate_hz))
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames, frame_rate_hz, source_label)
    }

    pub fn frames(&self) -> &[PoseFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    /// Frame dimension, or `None` for an empty corpus.
    pub fn dim(&self) -> Option<usize> {
        self.frames.first().map(PoseFrame::dim)
    }

    /// A corpus holding the frames at `indices`, in the given order. Used to
    /// carve out held-out segments; timestamps must remain increasing.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let frames = indices.iter().map(|&i| self.frames[i].clone()).collect();
        Self::new(frames, self.frame_rate_hz, self.source_label.clone())
    }

    /// Frames `range` as a new corpus.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        Self::new(
            self.frames[range].to_vec(),
            self.frame_rate_hz,
            self.source_label.clone(),
        )
    }
}

/// Per-dimension mean and standard deviation used to whiten encoder inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizationStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::DimensionMismatch {
                context: "standardization stats",
                expected: mean.len(),
                got: std.len(),
            });
        }
        if mean.iter().chain(&std).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("standardization stats"));
        }
        if std.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidConfig(
                "standard deviations must be strictly positive".into(),
            ));
        }
        Ok(Self { mean, std })
    }

    /// Identity transform of the given dimension.
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `(x - mean) / std`, component-wise.
    pub fn standardize(&self, values: &[f32]) -> Result<Vec<f64>> {
        self.check_dim(values.len())?;
        Ok(values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&x, (m, s))| (f64::from(x) - m) / s)
            .collect())
    }

    pub fn standardize_frame(&self, frame: &PoseFrame) -> Result<Vec<f64>> {
        self.standardize(frame.values())
    }

    /// Inverse of [`standardize`](Self::standardize).
    pub fn unstandardize(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(z.len())?;
        Ok(z.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(z, (m, s))| z * s + m)
            .collect())
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "standardize",
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

/// Per-dimension mean and population standard deviation, std floored at
/// [`STD_FLOOR`].
pub fn compute_standardization(corpus: &Corpus) -> Result<StandardizationStats> {
    compute_standardization_of(corpus.frames().iter().map(PoseFrame::values))
}

/// Standardization over an arbitrary set of frames (e.g. a training split).
pub fn compute_standardization_of<'a, I>(frames: I) -> Result<StandardizationStats>
where
    I: IntoIterator<Item = &'a [f32]> + Clone,
{
    let mut count = 0usize;
    let mut sum: Vec<f64> = Vec::new();
    for values in frames.clone() {
        if sum.is_empty() {
            sum = vec![0.0; values.len()];
        }
        if values.len() != sum.len() {
            return Err(Error::DimensionMismatch {
                context: "standardization",
                expected: sum.len(),
                got: values.len(),
            });
        }
        for (s, &v) in sum.iter_mut().zip(values) {
            *s += f64::from(v);
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyCorpus);
    }
    let n = count as f64;
    let mean: Vec<f64> = sum.into_iter().map(|s| s / n).collect();
    let mut sq = vec![0.0; mean.len()];
    for values in frames {
        for ((acc, &v), m) in sq.iter_mut().zip(values).zip(&mean) {
            let d = f64::from(v) - m;
            *acc += d * d;
        }
    }
    let std = sq
        .into_iter()
        .map(|s| (s / n).sqrt().max(STD_FLOOR))
        .collect();
    Ok(StandardizationStats { mean, std })
}
