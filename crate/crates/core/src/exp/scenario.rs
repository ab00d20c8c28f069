//! Scenario execution: one SAGIN sweep point or one cart-pole seed at a
//! time, and the full experiment that writes the metrics files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, Scenario};
use super::record::{canonical_sort, write_csv, MetricsRecord, Sidecar};
use crate::baselines::{greedy_batch, no_offload};
use crate::env::{CartPoleFamily, MultiAgentEnv, SaginEnv};
use crate::error::{Error, Result};
use crate::federation::AuditEntry;
use crate::sim::{SimConfig, SimMetrics};
use crate::train::{agent_seed, build_learner, run, Algorithm, Learner, RunLog, RunOptions};

/// World seed for evaluation, shared by every algorithm at a given seed.
pub fn eval_seed(seed: u64) -> u64 {
    agent_seed(seed, 1 << 20)
}

#[derive(Debug, Clone, Serialize)]
pub struct PointOutcome {
    pub metrics: SimMetrics,
    /// Mean unscaled per-packet reward during evaluation.
    pub mean_reward: f64,
    pub train_log: RunLog,
    pub audit: Vec<AuditEntry>,
    pub wall_clock_s: f64,
}

fn audit_of(learner: Option<&dyn Learner>) -> Vec<AuditEntry> {
    learner.and_then(|l| l.federation()).map(|s| s.audit().to_vec()).unwrap_or_default()
}

/// Trains `alg` on a world built from `sim`, then evaluates it with greedy
/// actions on a fresh world seeded by [`eval_seed`].
pub fn sagin_point(cfg: &ExperimentConfig, alg: Algorithm, seed: u64, sim: &SimConfig) -> Result<PointOutcome> {
    let t0 = Instant::now();
    let mut learner = if alg.learns() {
        let env = SaginEnv::new(sim.clone(), cfg.env, seed)?;
        let mut learner =
            build_learner(alg, env.num_agents(), env.obs_dim(), env.num_actions(), &cfg.learner(), seed)?.expect("learned algorithm");
        let mut env = env;
        let mut log = RunLog::new(env.num_agents());
        let ticks = cfg.budget.train_ticks;
        let opts = RunOptions {
            train_every: cfg.budget.train_every,
            evaluate: false,
        };
        run(&mut env, learner.as_mut(), opts, &mut log, &mut |g| g.steps >= ticks)?;
        Some((learner, log))
    } else {
        None
    };

    let mut env = SaginEnv::new(sim.clone(), cfg.env, eval_seed(seed))?;
    let ticks = cfg.budget.eval_ticks;
    match learner.as_mut() {
        Some((l, _)) => {
            let mut log = RunLog::new(env.num_agents());
            let opts = RunOptions {
                train_every: 1,
                evaluate: true,
            };
            run(&mut env, l.as_mut(), opts, &mut log, &mut |g| g.steps >= ticks)?;
        }
        None => {
            let mut rule = match alg {
                Algorithm::Greedy => greedy_batch,
                _ => no_offload,
            };
            for _ in 0..ticks {
                env.step_with(&mut rule)?;
            }
        }
    }
    let audit = audit_of(learner.as_ref().map(|(l, _)| l.as_ref()));
    Ok(PointOutcome {
        metrics: env.metrics(),
        mean_reward: env.mean_packet_reward(),
        train_log: learner.map(|(_, log)| log).unwrap_or_default(),
        audit,
        wall_clock_s: t0.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CartpoleOutcome {
    /// Mean return of each environment's last `final_window` episodes, averaged over environments.
    pub final_reward: f64,
    /// First `episodes` returns per environment.
    pub returns: Vec<Vec<f64>>,
    /// Mean policy loss of every training iteration, in order.
    pub policy_losses: Vec<f64>,
    pub audit: Vec<AuditEntry>,
    pub wall_clock_s: f64,
}

pub fn cartpole_seed(cfg: &ExperimentConfig, alg: Algorithm, seed: u64) -> Result<CartpoleOutcome> {
    if !alg.learns() {
        return Err(Error::config("algorithm", format!("`{alg}` has no cart-pole policy")));
    }
    let t0 = Instant::now();
    let c = &cfg.cartpole;
    let mut env = CartPoleFamily::new(&c.pole_lengths, seed, c.max_steps)?;
    let mut learner = build_learner(
        alg,
        env.num_agents(),
        env.obs_dim(),
        env.num_actions(),
        &cfg.cartpole_learner(),
        seed,
    )?
    .expect("learned algorithm");
    let mut log = RunLog::new(env.num_agents());
    let episodes = c.episodes;
    run(&mut env, learner.as_mut(), RunOptions::default(), &mut log, &mut |g| {
        g.min_episodes() >= episodes
    })?;
    let returns: Vec<Vec<f64>> = log.returns.iter().map(|r| r[..episodes].to_vec()).collect();
    let w = c.final_window;
    let final_reward = returns
        .iter()
        .map(|r| r[episodes - w..].iter().sum::<f64>() / w as f64)
        .sum::<f64>()
        / returns.len() as f64;
    Ok(CartpoleOutcome {
        final_reward,
        returns,
        policy_losses: log.policy_losses(),
        audit: audit_of(Some(learner.as_ref())),
        wall_clock_s: t0.elapsed().as_secs_f64(),
    })
}

/// Sweep points of a SAGIN scenario: `(sweep value, simulator config)`.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<(f64, SimConfig)> {
    match cfg.scenario {
        Scenario::SaginSweep => cfg
            .sweep
            .sources
            .iter()
            .map(|&n| {
                (
                    n as f64,
                    SimConfig {
                        num_sources: n,
                        ..cfg.sim.clone()
                    },
                )
            })
            .collect(),
        Scenario::SaginSpeedSweep => cfg
            .sweep
            .uav_speeds
            .iter()
            .map(|&v| {
                let sim = SimConfig {
                    num_sources: cfg.sweep.speed_sweep_sources,
                    uav_speed_mps: v,
                    ..cfg.sim.clone()
                };
                (v, sim)
            })
            .collect(),
        Scenario::CartpoleDifferentiated => vec![(cfg.cartpole.episodes as f64, cfg.sim.clone())],
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
    pub rows: Vec<MetricsRecord>,
}

pub fn output_stem(cfg: &ExperimentConfig) -> String {
    format!("{}_{}", cfg.scenario, cfg.algorithm)
}

/// Runs every (sweep value, seed) of `cfg` and writes
/// `<scenario>_<algorithm>.csv`, `.json` (sidecar), `.timing.csv` and, for
/// cart-pole, `.curves.csv` under `out`. A failing point leaves the rows
/// finished so far plus an error marker row, and the error is returned.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let stem = output_stem(cfg);
    let csv = out.join(format!("{stem}.csv"));
    let sidecar = out.join(format!("{stem}.json"));
    Sidecar::new(cfg).write(&sidecar)?;

    let mut rows = Vec::new();
    let mut timing = String::from("sweep_value,seed,wall_clock_s\n");
    let mut curves = String::from("seed,series,index,value\n");
    let mut failure = None;
    'points: for (value, sim) in sweep_points(cfg) {
        for &seed in &cfg.seeds {
            let row = match point_row(cfg, seed, value, &sim, &mut curves) {
                Ok(r) => r,
                Err(e) => {
                    let mut marker = blank_row(cfg, seed, value);
                    marker.status = "error".into();
                    marker.message = e.to_string();
                    rows.push(marker);
                    failure = Some(e);
                    break 'points;
                }
            };
            timing.push_str(&format!("{value},{seed},{}\n", row.wall_clock_s));
            let mut row = row;
            if !cfg.output.wall_clock_in_csv {
                row.wall_clock_s = 0.0;
            }
            rows.push(row);
        }
    }
    canonical_sort(&mut rows);
    write_csv(&csv, &rows)?;
    std::fs::write(out.join(format!("{stem}.timing.csv")), timing)?;
    if cfg.scenario == Scenario::CartpoleDifferentiated {
        std::fs::write(out.join(format!("{stem}.curves.csv")), curves)?;
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(RunOutput { csv, sidecar, rows }),
    }
}

fn blank_row(cfg: &ExperimentConfig, seed: u64, value: f64) -> MetricsRecord {
    MetricsRecord {
        scenario: cfg.scenario.to_string(),
        algorithm: cfg.algorithm.to_string(),
        seed,
        sweep_value: value,
        throughput_bps: 0.0,
        drop_rate: 0.0,
        mean_delay_s: 0.0,
        mean_episode_reward: 0.0,
        wall_clock_s: 0.0,
        status: "ok".into(),
        message: String::new(),
    }
}

fn point_row(cfg: &ExperimentConfig, seed: u64, value: f64, sim: &SimConfig, curves: &mut String) -> Result<MetricsRecord> {
    let mut row = blank_row(cfg, seed, value);
    match cfg.scenario {
        Scenario::CartpoleDifferentiated => {
            let o = cartpole_seed(cfg, cfg.algorithm, seed)?;
            for (agent, rs) in o.returns.iter().enumerate() {
                for (i, r) in rs.iter().enumerate() {
                    curves.push_str(&format!("{seed},return_{agent},{i},{r}\n"));
                }
            }
            for (i, l) in o.policy_losses.iter().enumerate() {
                curves.push_str(&format!("{seed},policy_loss,{i},{l}\n"));
            }
            row.mean_episode_reward = o.final_reward;
            row.wall_clock_s = o.wall_clock_s;
        }
        _ => {
            let o = sagin_point(cfg, cfg.algorithm, seed, sim)?;
            row.throughput_bps = o.metrics.throughput_bps;
            row.drop_rate = o.metrics.drop_rate;
            row.mean_delay_s = o.metrics.mean_delay_s;
            row.mean_episode_reward = o.mean_reward;
            row.wall_clock_s = o.wall_clock_s;
        }
    }
    row.check()?;
    Ok(row)
}
