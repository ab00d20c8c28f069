//! Classic cart-pole balancing with a configurable pole length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MultiAgentEnv, StepOutcome, Transition};
use crate::error::{Error, Result};

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const FORCE: f64 = 10.0;
const TAU: f64 = 0.02;
const THETA_LIMIT: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
const X_LIMIT: f64 = 2.4;

/// Single cart-pole. `pole_length` plays the role of the half-length in the
/// usual formulation (0.5 m reproduces the textbook system).
#[derive(Debug, Clone)]
pub struct CartPole {
    pub pole_length: f64,
    pub max_steps: usize,
    state: [f64; 4],
    steps: usize,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleStep {
    pub reward: f64,
    /// Pole fell or cart left the track.
    pub terminal: bool,
    /// Step limit reached without failure.
    pub truncated: bool,
}

impl CartPole {
    pub fn new(pole_length: f64, seed: u64) -> Result<Self> {
        if !(pole_length > 0.0 && pole_length.is_finite()) {
            return Err(Error::Domain(format!("pole length must be positive, got {pole_length}")));
        }
        let mut env = Self {
            pole_length,
            max_steps: 200,
            state: [0.0; 4],
            steps: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        env.reset();
        Ok(env)
    }

    pub fn reset(&mut self) -> [f64; 4] {
        for s in &mut self.state {
            *s = self.rng.random_range(-0.05..0.05);
        }
        self.steps = 0;
        self.state
    }

    pub fn state(&self) -> [f64; 4] {
        self.state
    }

    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
    }

    /// Explicit Euler step; action 1 pushes right, anything else pushes left.
    pub fn step(&mut self, action: usize) -> CartPoleStep {
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if action == 1 { FORCE } else { -FORCE };
        let total = MASS_CART + MASS_POLE;
        let pml = MASS_POLE * self.pole_length;
        let (sin, cos) = theta.sin_cos();
        let temp = (force + pml * theta_dot * theta_dot * sin) / total;
        let theta_acc = (GRAVITY * sin - cos * temp) / (self.pole_length * (4.0 / 3.0 - MASS_POLE * cos * cos / total));
        let x_acc = temp - pml * theta_acc * cos / total;
        self.state = [
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ];
        self.steps += 1;
        let failed = self.state[0].abs() > X_LIMIT || self.state[2].abs() > THETA_LIMIT;
        CartPoleStep {
            reward: if failed { 0.0 } else { 1.0 },
            terminal: failed,
            truncated: !failed && self.steps >= self.max_steps,
        }
    }
}

fn obs(state: [f64; 4]) -> Vec<f32> {
    state.iter().map(|&v| v as f32).collect()
}

/// One cart-pole per agent, each with its own pole length, stepped in lockstep.
#[derive(Debug, Clone)]
pub struct CartPoleFamily {
    envs: Vec<CartPole>,
    returns: Vec<f64>,
}

impl CartPoleFamily {
    pub fn new(pole_lengths: &[f64], seed: u64, max_steps: usize) -> Result<Self> {
        let envs = pole_lengths
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                CartPole::new(l, seed.wrapping_mul(1000).wrapping_add(i as u64)).map(|mut e| {
                    e.max_steps = max_steps;
                    e
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            returns: vec![0.0; envs.len()],
            envs,
        })
    }
}

impl MultiAgentEnv for CartPoleFamily {
    fn num_agents(&self) -> usize {
        self.envs.len()
    }

    fn obs_dim(&self) -> usize {
        4
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn observe(&self, agent: usize) -> Vec<f32> {
        obs(self.envs[agent].state())
    }

    fn needs_action(&self, _agent: usize) -> bool {
        true
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepOutcome> {
        if actions.len() != self.envs.len() {
            return Err(Error::Dimension {
                expected: self.envs.len(),
                got: actions.len(),
            });
        }
        let mut out = StepOutcome::new(self.envs.len());
        for (i, env) in self.envs.iter_mut().enumerate() {
            let before = obs(env.state());
            let s = env.step(actions[i]);
            self.returns[i] += s.reward;
            out.transitions[i].push(Transition {
                obs: before,
                action: actions[i],
                reward: s.reward,
                next_obs: obs(env.state()),
                terminal: s.terminal,
            });
            if s.terminal || s.truncated {
                out.episode_returns.push((i, self.returns[i]));
                self.returns[i] = 0.0;
                env.reset();
            }
        }
        Ok(out)
    }

    fn reset(&mut self) {
        for env in &mut self.envs {
            env.reset();
        }
        self.returns.iter_mut().for_each(|r| *r = 0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_trajectory() {
        let run = || {
            let mut e = CartPole::new(0.5, 3).unwrap();
            (0..100).map(|k| (e.step(k % 2), e.state())).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn unit_reward_until_failure() {
        let mut e = CartPole::new(0.5, 1).unwrap();
        loop {
            let s = e.step(1);
            if s.terminal {
                assert_eq!(s.reward, 0.0);
                break;
            }
            assert_eq!(s.reward, 1.0);
        }
    }

    #[test]
    fn pole_length_changes_dynamics() {
        let start = [0.0, 0.0, 0.05, 0.0];
        let traj = |len| {
            let mut e = CartPole::new(len, 0).unwrap();
            e.set_state(start);
            (0..20)
                .map(|_| {
                    e.step(0);
                    e.state()[2]
                })
                .collect::<Vec<_>>()
        };
        let (short, long) = (traj(0.3), traj(0.8));
        assert_eq!(short[0], long[0], "angle only moves after the first velocity update");
        assert!(short[5..].iter().zip(&long[5..]).all(|(a, b)| a != b));
        // A shorter pole falls faster.
        assert!(short[19].abs() > long[19].abs());
    }

    #[test]
    fn matches_hand_integrated_first_step() {
        let mut e = CartPole::new(0.5, 0).unwrap();
        e.set_state([0.0, 0.0, 0.1, 0.0]);
        e.step(1);
        // Same update, straight line.
        let (l, mp, mt) = (0.5, 0.1, 1.1);
        let temp = (10.0 + 0.0) / mt;
        let th_acc = (9.8 * 0.1f64.sin() - 0.1f64.cos() * temp) / (l * (4.0 / 3.0 - mp * 0.1f64.cos().powi(2) / mt));
        let x_acc = temp - mp * l * th_acc * 0.1f64.cos() / mt;
        assert_eq!(e.state(), [0.0, 0.02 * x_acc, 0.1, 0.02 * th_acc]);
    }

    #[test]
    fn family_truncates_and_reports_returns() {
        let mut f = CartPoleFamily::new(&[0.3, 0.5, 0.8], 1, 10).unwrap();
        let mut episodes = 0;
        for _ in 0..100 {
            let acts: Vec<usize> = (0..3).map(|i| (i + episodes) % 2).collect();
            let out = f.step(&acts).unwrap();
            assert!(out.transitions.iter().all(|t| t.len() == 1));
            for (_, r) in out.episode_returns {
                assert!(r <= 10.0);
                episodes += 1;
            }
        }
        assert!(episodes >= 30);
        assert!(CartPole::new(0.0, 1).is_err());
    }
}
