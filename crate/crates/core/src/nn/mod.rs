//! Minimal dense-network core: forward pass with a tape, exact reverse-mode
//! gradients, Adam, and a central-difference gradient checker. All arithmetic
//! is `f64`.

mod adam;
mod gradcheck;
mod layer;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::{gradient_check, gradient_check_seeded, relative_error};
pub use layer::{Activation, DenseLayer, Gradients, LayerGradient, Network, Tape};
