use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::SacConfig;
use crate::baselines::DdqnConfig;
use crate::env::SaginEnvConfig;
use crate::error::{Error, Result};
use crate::federation::FederationConfig;
use crate::sim::SimConfig;
use crate::train::{Algorithm, LearnerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Source-node count sweep.
    SaginSweep,
    /// UAV speed sweep at a fixed source count.
    SaginSpeedSweep,
    /// Cart-poles with different pole lengths, one agent each.
    CartpoleDifferentiated,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Self::SaginSweep, Self::SaginSpeedSweep, Self::CartpoleDifferentiated];

    pub fn name(self) -> &'static str {
        match self {
            Self::SaginSweep => "sagin_sweep",
            Self::SaginSpeedSweep => "sagin_speed_sweep",
            Self::CartpoleDifferentiated => "cartpole_differentiated",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::config("scenario", format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sources: Vec<usize>,
    pub uav_speeds: Vec<f64>,
    /// Source count held fixed during the speed sweep.
    pub speed_sweep_sources: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sources: vec![20, 30, 40, 50, 60],
            uav_speeds: vec![5.0, 15.0, 30.0],
            speed_sweep_sources: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    pub train_ticks: usize,
    pub eval_ticks: usize,
    /// Ticks between training iterations.
    pub train_every: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            train_ticks: 30_000,
            eval_ticks: 6_000,
            train_every: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartpoleConfig {
    pub pole_lengths: Vec<f64>,
    pub episodes: usize,
    pub max_steps: usize,
    /// Episodes at the end averaged into the reported reward.
    pub final_window: usize,
    /// Replaces `agent.target_entropy` in this scenario.
    pub target_entropy: f64,
    /// Replaces `federation.k` in this scenario.
    pub federation_k: usize,
    /// Replaces `agent.hidden` in this scenario.
    pub hidden: Vec<usize>,
    pub warmup: usize,
}

impl Default for CartpoleConfig {
    fn default() -> Self {
        Self {
            pole_lengths: vec![0.3, 0.5, 0.8],
            episodes: 500,
            max_steps: 200,
            final_window: 50,
            target_entropy: -0.98 * std::f64::consts::LN_2,
            federation_k: 10,
            hidden: vec![32, 32],
            warmup: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct OutputConfig {
    /// Write measured wall-clock seconds into the metrics CSV. Off by
    /// default so reruns produce identical bytes; timings always go to the
    /// separate timing file.
    pub wall_clock_in_csv: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub sim: SimConfig,
    pub env: SaginEnvConfig,
    pub agent: SacConfig,
    pub ddqn: DdqnConfig,
    pub federation: FederationConfig,
    /// Target blending rate for SAC variants without global backups.
    pub polyak_tau: f64,
    pub sweep: SweepConfig,
    pub budget: BudgetConfig,
    pub cartpole: CartpoleConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::SaginSweep,
            algorithm: Algorithm::Dfsac,
            seeds: vec![0, 1, 2, 3, 4],
            sim: SimConfig::default(),
            env: SaginEnvConfig::default(),
            agent: SaginAgentDefaults::sac(),
            ddqn: SaginAgentDefaults::ddqn(),
            federation: FederationConfig::default(),
            polyak_tau: 0.005,
            sweep: SweepConfig::default(),
            budget: BudgetConfig::default(),
            cartpole: CartpoleConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Desk-scale network sizes for the SAGIN agents.
struct SaginAgentDefaults;

impl SaginAgentDefaults {
    fn sac() -> SacConfig {
        SacConfig {
            hidden: vec![32, 32],
            batch_size: 32,
            ..SacConfig::default()
        }
    }

    fn ddqn() -> DdqnConfig {
        DdqnConfig {
            hidden: vec![32, 32],
            batch_size: 32,
            ..DdqnConfig::default()
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<root>".into());
            Error::config(path, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must not be empty"));
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return Err(Error::config("seeds", "must be distinct"));
        }
        if self.sweep.sources.is_empty() {
            return Err(Error::config("sweep.sources", "must not be empty"));
        }
        if self.sweep.uav_speeds.is_empty() {
            return Err(Error::config("sweep.uav_speeds", "must not be empty"));
        }
        if let Some(&v) = self.sweep.uav_speeds.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::config("sweep.uav_speeds", format!("speed {v} must be finite and >= 0")));
        }
        if self.sweep.sources.contains(&0) || self.sweep.speed_sweep_sources == 0 {
            return Err(Error::config("sweep.sources", "source counts must be >= 1"));
        }
        if self.budget.eval_ticks == 0 || self.budget.train_every == 0 {
            return Err(Error::config("budget", "eval_ticks and train_every must be >= 1"));
        }
        let c = &self.cartpole;
        if c.pole_lengths.is_empty() {
            return Err(Error::config("cartpole.pole_lengths", "must not be empty"));
        }
        if c.final_window == 0 || c.final_window > c.episodes {
            return Err(Error::config("cartpole.final_window", "must be in 1..=episodes"));
        }
        if c.federation_k == 0 {
            return Err(Error::config("cartpole.federation_k", "must be >= 1"));
        }
        if !(self.polyak_tau > 0.0 && self.polyak_tau <= 1.0) {
            return Err(Error::config("polyak_tau", "must be in (0, 1]"));
        }
        self.sim.validate()?;
        self.agent.validate()?;
        self.ddqn.validate()?;
        self.federation.validate()?;
        Ok(())
    }

    pub fn learner(&self) -> LearnerConfig {
        LearnerConfig {
            sac: self.agent.clone(),
            ddqn: self.ddqn.clone(),
            federation: self.federation.clone(),
            polyak_tau: self.polyak_tau,
        }
    }

    /// Learner settings with the cart-pole overrides applied.
    pub fn cartpole_learner(&self) -> LearnerConfig {
        let mut l = self.learner();
        let c = &self.cartpole;
        l.sac.target_entropy = c.target_entropy;
        l.sac.hidden = c.hidden.clone();
        l.sac.warmup = c.warmup;
        l.ddqn.hidden = c.hidden.clone();
        l.ddqn.warmup = c.warmup;
        l.federation.k = c.federation_k;
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_toml(
            "scenario = \"cartpole_differentiated\"\nalgorithm = \"fedavg_sac\"\nseeds = [3]\n[federation]\neps = 0.5\n",
        )
        .unwrap();
        assert_eq!(c.scenario, Scenario::CartpoleDifferentiated);
        assert_eq!(c.algorithm, Algorithm::FedavgSac);
        assert_eq!(c.federation.eps, 0.5);
        assert_eq!(c.federation.k, 200);
        assert_eq!(c.sim.num_bs, 8);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = |t: &str| match ExperimentConfig::from_toml(t) {
            Err(Error::Config { path, .. }) => path,
            other => panic!("{other:?}"),
        };
        assert_eq!(err("seeds = [1, 1]"), "seeds");
        assert_eq!(err("[sweep]\nsources = []"), "sweep.sources");
        assert_eq!(err("[federation]\neps = 0.0"), "federation.eps");
        assert_eq!(err("[sim]\ntick_s = -1.0"), "sim.tick_s");
        assert!(ExperimentConfig::from_toml("[sim]\nbogus = 1").is_err());
        assert!(ExperimentConfig::from_toml("algorithm = \"dqn\"").is_err());
    }
}
