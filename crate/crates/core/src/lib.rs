//! Tick-based ground/air/space relay network simulator and federated
//! soft actor-critic agents that learn where to offload traffic.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod baselines;
pub mod channel;
pub mod env;
pub mod error;
pub mod exp;
pub mod federation;
pub mod nn;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
