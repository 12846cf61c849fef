//! Gestural latent mapping.
//!
//! Trains a variational autoencoder on skeletal pose frames and uses its
//! encoder as a mapping from a 75-dimensional pose to a normalized 16-dimensional
//! control vector. Discrete triggers are derived per latent channel by a
//! two-filter crossing detector, and both streams are emitted over OSC.
//!
//! ```text
//! pose frame -> standardize -> encoder means -> per-component ±kσ window -> [0,1]^16
//!                                                      |                        |
//!                                                      +--> onset detector ------+--> OSC/UDP
//! ```
//!
//! The [`metrics`] module estimates consistency, diversity and range for any
//! mapping function, and [`runtime`] wires everything into the command-line
//! pipeline.

pub mod corpus;
pub mod error;
pub mod latent_map;
pub mod metrics;
pub mod nn;
pub mod onset;
pub mod osc;
pub mod runtime;
pub mod vae;

pub use corpus::{Corpus, PoseFrame, StandardizationStats, SynthConfig, POSE_DIM};
pub use error::{Error, Result};
pub use latent_map::{LatentStats, LatentVector};
pub use onset::{OnsetConfig, OnsetDetector, OnsetEvent};
pub use osc::{OscArg, OscMessage};
pub use vae::{LatentCode, TrainConfig, TrainHistory, VaeModel};

/// Default latent dimensionality.
pub const LATENT_DIM: usize = 16;
