//! Agent-facing view of the simulator and the cart-pole family.

pub mod cartpole;
pub mod observation;
pub mod offload;
pub mod reward;
pub mod sagin;

pub use cartpole::{CartPole, CartPoleFamily};
pub use observation::{observe, ObsConfig};
pub use offload::{apply_offload, ActionSpace, Target};
pub use reward::reward;
pub use sagin::{SaginEnv, SaginEnvConfig};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f32>,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Vec<f32>,
    pub terminal: bool,
}

/// Result of one lockstep step of every agent.
#[derive(Debug, Clone, Default)]
pub struct StepOutcome {
    /// Transitions completed during the step, per agent.
    pub transitions: Vec<Vec<Transition>>,
    /// `(agent, return)` for every episode that ended during the step.
    pub episode_returns: Vec<(usize, f64)>,
}

impl StepOutcome {
    pub fn new(agents: usize) -> Self {
        Self {
            transitions: vec![Vec::new(); agents],
            episode_returns: Vec::new(),
        }
    }
}

/// Common surface of the SAGIN adapter and the cart-pole family, so one
/// training loop serves both.
pub trait MultiAgentEnv {
    fn num_agents(&self) -> usize;
    fn obs_dim(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn observe(&self, agent: usize) -> Vec<f32>;
    /// Whether the agent has a decision to make this step.
    fn needs_action(&self, agent: usize) -> bool;
    /// Applies one action per agent; entries for idle agents are ignored.
    fn step(&mut self, actions: &[usize]) -> Result<StepOutcome>;
    fn reset(&mut self);
}
