//! OSC 1.0 messages over UDP.
//!
//! Only the `i`, `f`, `s` and `b` argument types are supported, and every
//! message travels as its own datagram (no bundles).
//!
//! Address scheme used by the pipeline:
//!
//! | address            | arguments        | direction |
//! |--------------------|------------------|-----------|
//! | `/sonified/latent` | 16 × `f`         | out       |
//! | `/sonified/onset`  | 1 × `i` channel  | out       |
//! | `/sonified/pose`   | 75 × `f`         | in        |

mod codec;
mod transport;

pub use codec::{decode_message, encode_message, OscArg, OscError, OscMessage};
pub use transport::{OscReceiver, OscSender};

pub const LATENT_ADDRESS: &str = "/sonified/latent";
pub const ONSET_ADDRESS: &str = "/sonified/onset";
pub const POSE_ADDRESS: &str = "/sonified/pose";

pub const DEFAULT_OUT_PORT: u16 = 9000;
pub const DEFAULT_IN_PORT: u16 = 9001;

/// `/sonified/latent` with one float per component.
pub fn latent_message(values: &[f32]) -> OscMessage {
    OscMessage {
        address: LATENT_ADDRESS.to_string(),
        args: values.iter().copied().map(OscArg::Float).collect(),
    }
}

/// `/sonified/onset` carrying the channel index.
pub fn onset_message(channel: usize) -> OscMessage {
    OscMessage {
        address: ONSET_ADDRESS.to_string(),
        args: vec![OscArg::Int(channel as i32)],
    }
}

pub fn pose_message(values: &[f32]) -> OscMessage {
    OscMessage {
        address: POSE_ADDRESS.to_string(),
        args: values.iter().copied().map(OscArg::Float).collect(),
    }
}

/// Float arguments of a message, or `None` if any argument is not a float.
pub fn float_args(msg: &OscMessage) -> Option<Vec<f32>> {
    msg.args
        .iter()
        .map(|a| match a {
            OscArg::Float(f) => Some(*f),
            _ => None,
        })
        .collect()
}
