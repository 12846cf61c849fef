//! Corpus file formats.
//!
//! Binary layout: `"LMC1"`, then little-endian `u32 frame_count`, `u32 dim`,
//! `f32 frame_rate_hz`, then `frame_count × dim` little-endian `f32` values in
//! frame-major order. Files ending in `.csv` are read as one frame per row,
//! with an optional header; a leading `t`/`time`/`timestamp` header column
//! supplies timestamps.

use std::path::Path;

use super::{Corpus, PoseFrame, POSE_DIM};
use crate::error::{Error, Result};

pub const CORPUS_MAGIC: &[u8; 4] = b"LMC1";
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Accept frames whose dimension is not 75.
    pub allow_any_dim: bool,
    /// Frame rate assumed for CSV input (binary files carry their own).
    pub csv_frame_rate_hz: f64,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            allow_any_dim: false,
            csv_frame_rate_hz: 30.0,
        }
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    load_corpus_with(path, &LoadOptions::default())
}

pub fn load_corpus_with(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Corpus> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let label = path.display().to_string();
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let corpus = if is_csv {
        parse_csv(&bytes, options.csv_frame_rate_hz, label)?
    } else {
        parse_binary(&bytes, label)?
    };
    if let Some(dim) = corpus.dim() {
        if dim != POSE_DIM && !options.allow_any_dim {
            return Err(Error::DimensionMismatch {
                context: "corpus file",
                expected: POSE_DIM,
                got: dim,
            });
        }
    }
    Ok(corpus)
}

/// Writes the binary format. Timestamps are not stored.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_binary(corpus)).map_err(|e| Error::io(path, e))
}

pub(crate) fn encode_binary(corpus: &Corpus) -> Vec<u8> {
    let dim = corpus.dim().unwrap_or(POSE_DIM);
    let mut out = Vec::with_capacity(HEADER_LEN + corpus.len() * dim * 4);
    out.extend_from_slice(CORPUS_MAGIC);
    out.extend_from_slice(&(corpus.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(corpus.frame_rate_hz() as f32).to_le_bytes());
    for frame in corpus.frames() {
        for v in frame.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub(crate) fn parse_binary(bytes: &[u8], label: String) -> Result<Corpus> {
    if bytes.len() < 4 || &bytes[..4] != CORPUS_MAGIC {
        return Err(Error::BadMagic { expected: "LMC1" });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Truncated {
            what: "corpus header",
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let count = u32_at(4) as usize;
    let dim = u32_at(8) as usize;
    let rate = f32::from_le_bytes(bytes[12..16].try_into().unwrap());
    if dim == 0 {
        return Err(Error::DimensionMismatch {
            context: "corpus header",
            expected: POSE_DIM,
            got: 0,
        });
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = count * dim * 4;
    if payload.len() < expected {
        return Err(Error::Truncated {
            what: "corpus payload",
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::TrailingBytes {
            count: payload.len() - expected,
        });
    }
    let rate = f64::from(rate);
    let frames = payload
        .chunks_exact(dim * 4)
        .enumerate()
        .map(|(i, chunk)| {
            let values = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            PoseFrame::with_any_dim(values, i as f64 / rate)
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(frames, rate, label)
}

fn parse_csv(bytes: &[u8], frame_rate_hz: f64, label: String) -> Result<Corpus> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut frames = Vec::new();
    let mut time_column = false;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv {
            line: line + 1,
            message: e.to_string(),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if line == 0 => {
                // header row
                let first = record.get(0).unwrap_or("").to_ascii_lowercase();
                time_column = matches!(first.as_str(), "t" | "time" | "timestamp");
                continue;
            }
            Err(e) => {
                return Err(Error::Csv {
                    line: line + 1,
                    message: e.to_string(),
                })
            }
        };
        let (timestamp, values) = if time_column {
            (row[0], &row[1..])
        } else {
            (frames.len() as f64 / frame_rate_hz, &row[..])
        };
        let values = values.iter().map(|&v| v as f32).collect();
        frames.push(
            PoseFrame::with_any_dim(values, timestamp).map_err(|e| Error::Csv {
                line: line + 1,
                message: e.to_string(),
            })?,
        );
    }
    Corpus::new(frames, frame_rate_hz, label)
}
