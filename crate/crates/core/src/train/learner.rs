//! Uniform driver over the learned algorithms: per-agent acting, recording
//! and one training iteration at a time, with federation rounds every `k`
//! iterations.

use serde::{Deserialize, Serialize};

use crate::agent::{ActionMode, SacAgent, SacConfig, TargetMode};
use crate::baselines::{DdqnAgent, DdqnConfig};
use crate::env::Transition;
use crate::error::{Error, Result};
use crate::federation::{FederationConfig, FederationMode, FederationServer, PayloadKind, RoundMessage};
use crate::nn::ParamSet;

use super::Algorithm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub sac: SacConfig,
    pub ddqn: DdqnConfig,
    pub federation: FederationConfig,
    /// Target blending rate for the SAC variants without global backups.
    pub polyak_tau: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            sac: SacConfig::default(),
            ddqn: DdqnConfig::default(),
            federation: FederationConfig::default(),
            polyak_tau: 0.005,
        }
    }
}

/// Mean diagnostics over the agents that trained in one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrainStats {
    pub trained: usize,
    pub critic_loss: f64,
    /// SAC only.
    pub policy_loss: Option<f64>,
    pub alpha: Option<f64>,
}

pub trait Learner {
    fn num_agents(&self) -> usize;
    fn act(&mut self, agent: usize, obs: &[f32], mode: ActionMode) -> Result<usize>;
    fn record(&mut self, agent: usize, t: &Transition) -> Result<()>;
    /// One iteration: every agent with enough replay trains once. Returns
    /// `None` when nobody was ready.
    fn train(&mut self) -> Result<Option<TrainStats>>;
    fn federation(&self) -> Option<&FederationServer> {
        None
    }
}

/// Decorrelated per-agent seed.
pub fn agent_seed(seed: u64, agent: usize) -> u64 {
    let mut z = seed ^ (agent as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SacScheme {
    /// One agent per environment, local Polyak targets, no sharing.
    Independent,
    /// Private policies; trend networks softly federated into global backups.
    Dfsac,
    /// Full models averaged every round.
    Fedavg,
    /// A single agent fed by every environment.
    Centralized,
}

pub struct SacLearner {
    pub agents: Vec<SacAgent>,
    scheme: SacScheme,
    server: Option<FederationServer>,
    envs: usize,
    iterations: usize,
}

impl SacLearner {
    pub fn new(scheme: SacScheme, envs: usize, obs_dim: usize, actions: usize, cfg: &LearnerConfig, seed: u64) -> Result<Self> {
        if envs == 0 {
            return Err(Error::config("env.agents", "need at least one agent"));
        }
        let mut sac = cfg.sac.clone();
        sac.target = match scheme {
            SacScheme::Dfsac => TargetMode::GlobalBackup,
            _ => TargetMode::Polyak { tau: cfg.polyak_tau },
        };
        let count = if scheme == SacScheme::Centralized { 1 } else { envs };
        let mut agents = (0..count)
            .map(|i| SacAgent::new(obs_dim, actions, sac.clone(), agent_seed(seed, i)))
            .collect::<Result<Vec<_>>>()?;
        let roster: Vec<u32> = (0..count as u32).collect();
        let fed = FederationConfig {
            mode: if scheme == SacScheme::Fedavg {
                FederationMode::FedavgMean
            } else {
                FederationMode::DfsacSoft
            },
            ..cfg.federation.clone()
        };
        let server = match scheme {
            SacScheme::Dfsac => {
                // Locals start equal to the global trend networks.
                let globals = [agents[0].trend(0).clone(), agents[0].trend(1).clone()];
                for a in &mut agents {
                    a.sync_trends(&globals)?;
                }
                let [g1, g2] = globals;
                Some(FederationServer::new(
                    fed,
                    &roster,
                    vec![(PayloadKind::Trend1, g1), (PayloadKind::Trend2, g2)],
                )?)
            }
            SacScheme::Fedavg => {
                let full = agents[0].full_model();
                for a in &mut agents {
                    a.set_full_model(&full)?;
                    let trends = [a.trend(0).clone(), a.trend(1).clone()];
                    a.sync_trends(&trends)?;
                }
                Some(FederationServer::new(fed, &roster, vec![(PayloadKind::FullModel, full)])?)
            }
            _ => None,
        };
        Ok(Self {
            agents,
            scheme,
            server,
            envs,
            iterations: 0,
        })
    }

    pub fn scheme(&self) -> SacScheme {
        self.scheme
    }

    fn owner(&self, agent: usize) -> usize {
        if self.scheme == SacScheme::Centralized {
            0
        } else {
            agent
        }
    }

    fn federate(&mut self) -> Result<()> {
        let Some(server) = self.server.as_mut() else { return Ok(()) };
        let round = server.round();
        let mut uploads = Vec::new();
        for (i, a) in self.agents.iter().enumerate() {
            let id = i as u32;
            match self.scheme {
                SacScheme::Fedavg => uploads.push(RoundMessage::new(round, id, PayloadKind::FullModel, &a.full_model())),
                _ => {
                    uploads.push(RoundMessage::new(round, id, PayloadKind::Trend1, a.trend(0)));
                    uploads.push(RoundMessage::new(round, id, PayloadKind::Trend2, a.trend(1)));
                }
            }
        }
        let dist = server.run_round(&uploads)?;
        for (i, a) in self.agents.iter_mut().enumerate() {
            for m in &dist[&(i as u32)] {
                let p = m.params()?;
                match m.kind {
                    PayloadKind::Trend1 => a.set_backup(0, &p)?,
                    PayloadKind::Trend2 => a.set_backup(1, &p)?,
                    PayloadKind::FullModel => a.set_full_model(&p)?,
                }
            }
        }
        Ok(())
    }
}

impl Learner for SacLearner {
    fn num_agents(&self) -> usize {
        self.envs
    }

    fn act(&mut self, agent: usize, obs: &[f32], mode: ActionMode) -> Result<usize> {
        let i = self.owner(agent);
        self.agents[i].select_action(obs, mode)
    }

    fn record(&mut self, agent: usize, t: &Transition) -> Result<()> {
        let i = self.owner(agent);
        self.agents[i].remember(t, agent as u32)
    }

    fn train(&mut self) -> Result<Option<TrainStats>> {
        let mut n = 0usize;
        let (mut critic, mut policy, mut alpha) = (0.0, 0.0, 0.0);
        for a in &mut self.agents {
            if !a.ready() {
                continue;
            }
            let d = a.train_step()?;
            n += 1;
            critic += 0.5 * (d.trend_loss[0] + d.trend_loss[1]);
            policy += d.policy_loss;
            alpha += d.alpha;
        }
        if n == 0 {
            return Ok(None);
        }
        self.iterations += 1;
        if self.server.is_some() && self.iterations.is_multiple_of(self.k()) {
            self.federate()?;
        }
        let m = n as f64;
        Ok(Some(TrainStats {
            trained: n,
            critic_loss: critic / m,
            policy_loss: Some(policy / m),
            alpha: Some(alpha / m),
        }))
    }

    fn federation(&self) -> Option<&FederationServer> {
        self.server.as_ref()
    }
}

impl SacLearner {
    fn k(&self) -> usize {
        self.server.as_ref().map_or(usize::MAX, |s| s.config().k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdqnScheme {
    Independent,
    /// Q networks averaged every round.
    Federated,
    /// Q networks softly federated into a global copy that serves as every
    /// agent's target network.
    Differentiated,
}

pub struct DdqnLearner {
    pub agents: Vec<DdqnAgent>,
    scheme: DdqnScheme,
    server: Option<FederationServer>,
    iterations: usize,
}

impl DdqnLearner {
    pub fn new(scheme: DdqnScheme, envs: usize, obs_dim: usize, actions: usize, cfg: &LearnerConfig, seed: u64) -> Result<Self> {
        if envs == 0 {
            return Err(Error::config("env.agents", "need at least one agent"));
        }
        let mut agents = (0..envs)
            .map(|i| DdqnAgent::new(obs_dim, actions, cfg.ddqn.clone(), agent_seed(seed, i)))
            .collect::<Result<Vec<_>>>()?;
        let roster: Vec<u32> = (0..envs as u32).collect();
        let init: ParamSet = agents[0].q().clone();
        let server = match scheme {
            DdqnScheme::Independent => None,
            DdqnScheme::Federated => {
                for a in &mut agents {
                    a.set_q(&init)?;
                    a.sync_target();
                }
                let fed = FederationConfig {
                    mode: FederationMode::FedavgMean,
                    ..cfg.federation.clone()
                };
                Some(FederationServer::new(fed, &roster, vec![(PayloadKind::FullModel, init)])?)
            }
            DdqnScheme::Differentiated => {
                for a in &mut agents {
                    a.set_q(&init)?;
                    a.set_target(&init)?;
                }
                let fed = FederationConfig {
                    mode: FederationMode::DfsacSoft,
                    ..cfg.federation.clone()
                };
                Some(FederationServer::new(fed, &roster, vec![(PayloadKind::Trend1, init)])?)
            }
        };
        Ok(Self {
            agents,
            scheme,
            server,
            iterations: 0,
        })
    }

    fn federate(&mut self) -> Result<()> {
        let Some(server) = self.server.as_mut() else { return Ok(()) };
        let round = server.round();
        let kind = if self.scheme == DdqnScheme::Federated {
            PayloadKind::FullModel
        } else {
            PayloadKind::Trend1
        };
        let uploads: Vec<_> = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, a)| RoundMessage::new(round, i as u32, kind, a.q()))
            .collect();
        let dist = server.run_round(&uploads)?;
        for (i, a) in self.agents.iter_mut().enumerate() {
            let p = dist[&(i as u32)][0].params()?;
            match kind {
                PayloadKind::FullModel => a.set_q(&p)?,
                _ => a.set_target(&p)?,
            }
        }
        Ok(())
    }
}

impl Learner for DdqnLearner {
    fn num_agents(&self) -> usize {
        self.agents.len()
    }

    fn act(&mut self, agent: usize, obs: &[f32], mode: ActionMode) -> Result<usize> {
        self.agents[agent].select_action(obs, mode)
    }

    fn record(&mut self, agent: usize, t: &Transition) -> Result<()> {
        self.agents[agent].remember(t, agent as u32)
    }

    fn train(&mut self) -> Result<Option<TrainStats>> {
        let mut n = 0usize;
        let mut loss = 0.0;
        for a in &mut self.agents {
            if a.ready() {
                loss += a.train_step()?;
                n += 1;
            }
        }
        if n == 0 {
            return Ok(None);
        }
        self.iterations += 1;
        if let Some(k) = self.server.as_ref().map(|s| s.config().k) {
            if self.iterations.is_multiple_of(k) {
                self.federate()?;
            }
        }
        Ok(Some(TrainStats {
            trained: n,
            critic_loss: loss / n as f64,
            policy_loss: None,
            alpha: None,
        }))
    }

    fn federation(&self) -> Option<&FederationServer> {
        self.server.as_ref()
    }
}

/// Learner for a learned algorithm; `None` for the rule baselines.
pub fn build_learner(
    alg: Algorithm,
    envs: usize,
    obs_dim: usize,
    actions: usize,
    cfg: &LearnerConfig,
    seed: u64,
) -> Result<Option<Box<dyn Learner>>> {
    let sac = |s| -> Result<Option<Box<dyn Learner>>> { Ok(Some(Box::new(SacLearner::new(s, envs, obs_dim, actions, cfg, seed)?))) };
    let dqn = |s| -> Result<Option<Box<dyn Learner>>> { Ok(Some(Box::new(DdqnLearner::new(s, envs, obs_dim, actions, cfg, seed)?))) };
    match alg {
        Algorithm::Dfsac => sac(SacScheme::Dfsac),
        Algorithm::FedavgSac => sac(SacScheme::Fedavg),
        Algorithm::CentralizedSac => sac(SacScheme::Centralized),
        Algorithm::Ddqn => dqn(DdqnScheme::Independent),
        Algorithm::FlDdqn => dqn(DdqnScheme::Federated),
        Algorithm::DfrlDdqn => dqn(DdqnScheme::Differentiated),
        Algorithm::Greedy | Algorithm::None => Ok(None),
    }
}
