//! Small dense networks: parameters, forward/backward, Adam, wire format.

pub mod adam;
pub mod gradcheck;
pub mod mlp;
pub mod params;
pub mod wire;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use mlp::{backward_batch, forward, forward_batch, grad, log_softmax_rows, softmax_rows, Trace};
pub use params::{Head, NetSpec, ParamSet};
pub use wire::{deserialize, serialize};
