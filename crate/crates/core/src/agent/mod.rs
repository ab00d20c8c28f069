//! Learning agents: replay memory and the discrete soft actor-critic.

mod checkpoint;
pub mod replay;
pub mod sac;

pub use replay::{Batch, Replay};
pub use sac::{argmax, sample_categorical, ActionMode, Diagnostics, SacAgent, SacConfig, TargetMode};
