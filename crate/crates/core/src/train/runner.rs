use serde::Serialize;

use super::learner::{Learner, TrainStats};
use crate::agent::ActionMode;
use crate::env::MultiAgentEnv;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    /// Environment steps between training iterations.
    pub train_every: usize,
    /// Act and record without training, with greedy actions.
    pub evaluate: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            train_every: 1,
            evaluate: false,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunLog {
    pub steps: usize,
    /// Completed episode returns, per agent, in order.
    pub returns: Vec<Vec<f64>>,
    pub train: Vec<TrainStats>,
    pub transitions: usize,
}

impl RunLog {
    pub fn new(agents: usize) -> Self {
        Self {
            returns: vec![Vec::new(); agents],
            ..Self::default()
        }
    }

    pub fn min_episodes(&self) -> usize {
        self.returns.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn policy_losses(&self) -> Vec<f64> {
        self.train.iter().filter_map(|s| s.policy_loss).collect()
    }
}

/// Steps `env` with `learner` until `stop` says so, training as configured.
pub fn run(
    env: &mut dyn MultiAgentEnv,
    learner: &mut dyn Learner,
    opts: RunOptions,
    log: &mut RunLog,
    stop: &mut dyn FnMut(&RunLog) -> bool,
) -> Result<()> {
    let n = env.num_agents();
    let mode = if opts.evaluate { ActionMode::Greedy } else { ActionMode::Sample };
    let every = opts.train_every.max(1);
    let mut actions = vec![0usize; n];
    while !stop(log) {
        for (agent, slot) in actions.iter_mut().enumerate() {
            *slot = if env.needs_action(agent) {
                learner.act(agent, &env.observe(agent), mode)?
            } else {
                0
            };
        }
        let out = env.step(&actions)?;
        for (agent, ts) in out.transitions.iter().enumerate() {
            for t in ts {
                log.transitions += 1;
                if !opts.evaluate {
                    learner.record(agent, t)?;
                }
            }
        }
        for (agent, r) in out.episode_returns {
            log.returns[agent].push(r);
        }
        log.steps += 1;
        if !opts.evaluate && log.steps.is_multiple_of(every) {
            if let Some(s) = learner.train()? {
                log.train.push(s);
            }
        }
    }
    Ok(())
}
