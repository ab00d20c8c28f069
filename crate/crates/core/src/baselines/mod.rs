//! Comparison policies: rule-based offloading and double DQN.

pub mod ddqn;
pub mod rules;

pub use ddqn::{DdqnAgent, DdqnConfig};
pub use rules::{greedy_batch, greedy_offload, no_offload};
