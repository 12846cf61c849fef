//! Command-line pipeline: corpus generation, training, offline mapping,
//! metrics, and the live OSC loop.
//!
//! The live loop runs two workers joined by a bounded queue. The ingest
//! worker paces a corpus file or receives `/sonified/pose` messages; the
//! map/send worker maps each frame, runs onset detection and emits OSC. When
//! ingest outpaces mapping the oldest queued frame is dropped.

mod commands;
mod config;
mod latency;
mod pipeline;
mod queue;

pub use commands::{
    cmd_map, cmd_metrics, cmd_synth, cmd_train, default_history_path, write_latent_csv,
    TrainOutcome,
};
pub use config::{ConfigFile, InputSource, RunSection, RuntimeConfig};
pub use latency::{LatencyRecord, LatencySummary, LatencyTracker};
pub use pipeline::{cmd_run, Pipeline, RunSummary};
pub use queue::FrameQueue;
