//! Multi-agent adapter: one agent per BS, acting on its awaiting batch.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::observation::{obs_dim, observe, ObsConfig};
use super::offload::ActionSpace;
use super::reward::reward;
use super::{MultiAgentEnv, StepOutcome, Transition};
use crate::error::{Error, Result};
use crate::sim::engine::{Event, EventKind};
use crate::sim::metrics::{MetricsAccumulator, SimMetrics};
use crate::sim::world::{NodeId, World};
use crate::sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SaginEnvConfig {
    pub obs: ObsConfig,
    /// Multiplies every reward before it reaches the agents.
    pub reward_scale: f64,
}

impl Default for SaginEnvConfig {
    fn default() -> Self {
        Self {
            obs: ObsConfig::default(),
            reward_scale: 0.05,
        }
    }
}

/// A decision whose packets have not all finished yet.
#[derive(Debug, Clone)]
struct Pending {
    agent: usize,
    obs: Vec<f32>,
    action: usize,
    next_obs: Option<Vec<f32>>,
    outstanding: usize,
    reward_sum: f64,
    finished: usize,
}

#[derive(Debug, Clone)]
pub struct SaginEnv {
    sim: SimConfig,
    cfg: SaginEnvConfig,
    seed: u64,
    world: World,
    space: ActionSpace,
    pending: BTreeMap<(u64, NodeId), Pending>,
    metrics: MetricsAccumulator,
    start_tick: u64,
    decision_reward_sum: f64,
    decisions_done: u64,
    packet_reward_sum: f64,
    packets_done: u64,
}

impl SaginEnv {
    pub fn new(sim: SimConfig, cfg: SaginEnvConfig, seed: u64) -> Result<Self> {
        if !(cfg.reward_scale > 0.0 && cfg.reward_scale.is_finite()) {
            return Err(Error::config("env.reward_scale", "must be positive"));
        }
        let world = World::new(sim.clone(), seed)?;
        let mut env = Self {
            space: ActionSpace::new(&sim),
            sim,
            cfg,
            seed,
            world,
            pending: BTreeMap::new(),
            metrics: MetricsAccumulator::default(),
            start_tick: 0,
            decision_reward_sum: 0.0,
            decisions_done: 0,
            packet_reward_sum: 0.0,
            packets_done: 0,
        };
        env.reset_world()?;
        Ok(env)
    }

    fn reset_world(&mut self) -> Result<()> {
        self.world = World::new(self.sim.clone(), self.seed)?;
        self.pending.clear();
        self.metrics = MetricsAccumulator::default();
        self.start_tick = self.world.tick;
        self.decision_reward_sum = 0.0;
        self.decisions_done = 0;
        self.packet_reward_sum = 0.0;
        self.packets_done = 0;
        let events = self.world.begin_tick()?;
        self.absorb(&events);
        Ok(())
    }

    fn absorb(&mut self, events: &[Event]) {
        for e in events {
            self.metrics.push(e);
            if let Some(r) = reward(e, self.sim.tick_s) {
                self.packet_reward_sum += r;
                self.packets_done += 1;
            }
        }
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn bs_of(&self, agent: usize) -> NodeId {
        self.world.layout().bs.start + agent
    }

    /// Network metrics since the last reset.
    pub fn metrics(&self) -> SimMetrics {
        let window = (self.world.tick - self.start_tick) as f64 * self.sim.tick_s;
        self.metrics.finish(window, self.sim.tick_s)
    }

    /// Mean unscaled reward of completed decisions since the last reset.
    pub fn mean_decision_reward(&self) -> f64 {
        if self.decisions_done == 0 {
            0.0
        } else {
            self.decision_reward_sum / self.decisions_done as f64
        }
    }

    /// Mean unscaled reward over every packet that finished since the last
    /// reset, offloaded or not.
    pub fn mean_packet_reward(&self) -> f64 {
        if self.packets_done == 0 {
            0.0
        } else {
            self.packet_reward_sum / self.packets_done as f64
        }
    }

    /// Advances one tick with `choose` deciding every awaiting batch directly.
    /// Used by the rule-based baselines, which never need transitions.
    pub fn step_with(&mut self, choose: &mut dyn FnMut(&World, NodeId, &[u64]) -> usize) -> Result<()> {
        let mut events = self.world.finish_tick(choose);
        events.extend(self.world.begin_tick()?);
        self.absorb(&events);
        Ok(())
    }
}

impl MultiAgentEnv for SaginEnv {
    fn num_agents(&self) -> usize {
        self.sim.num_bs
    }

    fn obs_dim(&self) -> usize {
        obs_dim(&self.world)
    }

    fn num_actions(&self) -> usize {
        self.space.size()
    }

    fn observe(&self, agent: usize) -> Vec<f32> {
        observe(&self.world, self.bs_of(agent), &self.cfg.obs)
    }

    fn needs_action(&self, agent: usize) -> bool {
        !self.world.awaiting_batch(self.bs_of(agent)).is_empty()
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepOutcome> {
        let n = self.num_agents();
        if actions.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: actions.len(),
            });
        }
        let tick = self.world.tick;
        let bs0 = self.bs_of(0);
        let mut fresh = Vec::new();
        for (agent, &action) in actions.iter().enumerate() {
            if self.needs_action(agent) {
                let bs = bs0 + agent;
                self.pending.insert(
                    (tick, bs),
                    Pending {
                        agent,
                        obs: self.observe(agent),
                        action,
                        next_obs: None,
                        outstanding: 0,
                        reward_sum: 0.0,
                        finished: 0,
                    },
                );
                fresh.push((tick, bs));
            }
        }

        let mut events = self.world.finish_tick(&mut |_, bs, _| actions[bs - bs0]);
        events.extend(self.world.begin_tick()?);
        let dt = self.sim.tick_s;
        self.absorb(&events);
        for e in &events {
            let Some((bs, t)) = e.decider else { continue };
            let Some(p) = self.pending.get_mut(&(t, bs)) else { continue };
            match e.kind {
                EventKind::Decided { .. } => p.outstanding += 1,
                _ => {
                    if let Some(r) = reward(e, dt) {
                        p.reward_sum += r;
                        p.finished += 1;
                        p.outstanding -= 1;
                    }
                }
            }
        }
        for key in fresh {
            let agent = self.pending[&key].agent;
            let next = self.observe(agent);
            self.pending.get_mut(&key).expect("fresh decision").next_obs = Some(next);
        }

        let mut out = StepOutcome::new(n);
        let done: Vec<_> = self
            .pending
            .iter()
            .filter(|(_, p)| p.outstanding == 0 && p.finished > 0 && p.next_obs.is_some())
            .map(|(&k, _)| k)
            .collect();
        for key in done {
            let p = self.pending.remove(&key).expect("listed above");
            let mean = p.reward_sum / p.finished as f64;
            self.decision_reward_sum += mean;
            self.decisions_done += 1;
            out.transitions[p.agent].push(Transition {
                obs: p.obs,
                action: p.action,
                reward: mean * self.cfg.reward_scale,
                next_obs: p.next_obs.expect("filtered"),
                terminal: false,
            });
        }
        Ok(out)
    }

    fn reset(&mut self) {
        self.reset_world().expect("configuration validated at construction");
    }
}
