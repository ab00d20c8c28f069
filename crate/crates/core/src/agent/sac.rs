//! Discrete soft actor-critic with a private policy, two local trend
//! (critic) networks and a pair of bootstrap networks that are either the
//! federated global trend backups or Polyak-averaged targets.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::replay::{Batch, Replay};
use crate::env::Transition;
use crate::error::{Error, Result};
use crate::nn::mlp::{backward_batch, forward_batch, log_softmax_rows, softmax_rows};
use crate::nn::{AdamState, Head, NetSpec, ParamSet};

/// Lower bound kept on `log α` so the temperature never underflows.
pub const LOG_ALPHA_MIN: f32 = -30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetMode {
    /// Bootstrap from the global trend backups, which only federation updates.
    GlobalBackup,
    /// Bootstrap from local target copies blended after every train step.
    Polyak { tau: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SacConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub alpha_lr: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    /// Transitions stored before training starts.
    pub warmup: usize,
    pub target_entropy: f64,
    pub init_alpha: f64,
    /// Global L2 bound applied to every gradient before the optimizer step.
    pub grad_clip: Option<f64>,
    pub target: TargetMode,
}

impl Default for SacConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            lr: 5e-4,
            alpha_lr: 1e-3,
            gamma: 0.99,
            batch_size: 64,
            replay_capacity: 100_000,
            warmup: 1000,
            target_entropy: -4.0,
            init_alpha: 1.0,
            grad_clip: None,
            target: TargetMode::GlobalBackup,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, msg: &str| Err(Error::config(path, msg));
        if !(self.lr > 0.0 && self.alpha_lr > 0.0) {
            return bad("agent.lr", "learning rates must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("agent.gamma", "must be in [0, 1]");
        }
        if self.batch_size == 0 || self.replay_capacity < self.batch_size {
            return bad("agent.batch_size", "must be >= 1 and fit in the replay memory");
        }
        if !(self.init_alpha > 0.0) {
            return bad("agent.init_alpha", "must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("agent.hidden", "layer widths must be >= 1");
        }
        if let TargetMode::Polyak { tau } = self.target {
            if !(tau > 0.0 && tau <= 1.0) {
                return bad("agent.target.tau", "must be in (0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    Sample,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub trend_loss: [f64; 2],
    pub policy_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
    pub entropy: f64,
}

impl Diagnostics {
    pub fn is_finite(&self) -> bool {
        [
            self.trend_loss[0],
            self.trend_loss[1],
            self.policy_loss,
            self.alpha_loss,
            self.alpha,
            self.entropy,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax(xs: &[f32]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Draws an index from a probability vector with one uniform variate.
pub fn sample_categorical<R: Rng + ?Sized>(probs: &[f32], rng: &mut R) -> usize {
    let u: f32 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left a sliver above the cumulative sum: pick the last
    // action with non-zero mass.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn elementwise_min(a: &Array2<f32>, b: &Array2<f32>) -> Array2<f32> {
    let mut m = a.clone();
    m.zip_mut_with(b, |x, &y| *x = x.min(y));
    m
}

#[derive(Debug, Clone)]
pub struct SacAgent {
    pub cfg: SacConfig,
    policy_spec: NetSpec,
    trend_spec: NetSpec,
    policy: ParamSet,
    trend: [ParamSet; 2],
    backup: [ParamSet; 2],
    log_alpha: ParamSet,
    opt_policy: AdamState,
    opt_trend: [AdamState; 2],
    opt_alpha: AdamState,
    replay: Replay,
    steps: u64,
    rng: ChaCha8Rng,
}

/// Policy-side quantities of one batch of states.
struct PolicyEval {
    probs: Array2<f32>,
    logp: Array2<f32>,
}

impl SacAgent {
    pub fn new(obs_dim: usize, num_actions: usize, cfg: SacConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let policy_spec = NetSpec::new(obs_dim, &cfg.hidden, num_actions, Head::Logits);
        let trend_spec = NetSpec::new(obs_dim, &cfg.hidden, num_actions, Head::Values);
        policy_spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = ParamSet::init(&policy_spec, &mut rng);
        let trend = [ParamSet::init(&trend_spec, &mut rng), ParamSet::init(&trend_spec, &mut rng)];
        let log_alpha = ParamSet::from_parts(vec![vec![1]], vec![cfg.init_alpha.ln() as f32])?;
        Ok(Self {
            opt_policy: AdamState::for_params(&policy),
            opt_trend: [AdamState::for_params(&trend[0]), AdamState::for_params(&trend[1])],
            opt_alpha: AdamState::for_params(&log_alpha),
            replay: Replay::new(cfg.replay_capacity, obs_dim),
            backup: trend.clone(),
            policy,
            trend,
            log_alpha,
            policy_spec,
            trend_spec,
            cfg,
            steps: 0,
            rng,
        })
    }

    pub fn policy_spec(&self) -> &NetSpec {
        &self.policy_spec
    }

    pub fn trend_spec(&self) -> &NetSpec {
        &self.trend_spec
    }

    pub fn policy(&self) -> &ParamSet {
        &self.policy
    }

    pub fn set_policy(&mut self, p: &ParamSet) -> Result<()> {
        self.policy.copy_from(p)
    }

    pub fn trend(&self, i: usize) -> &ParamSet {
        &self.trend[i]
    }

    pub fn set_trend(&mut self, i: usize, p: &ParamSet) -> Result<()> {
        self.trend[i].copy_from(p)
    }

    pub fn backup(&self, i: usize) -> &ParamSet {
        &self.backup[i]
    }

    /// Installs federated global trend parameters as the bootstrap networks.
    pub fn set_backup(&mut self, i: usize, p: &ParamSet) -> Result<()> {
        self.backup[i].copy_from(p)
    }

    /// Sets local trend networks and backups to the same parameters.
    pub fn sync_trends(&mut self, globals: &[ParamSet; 2]) -> Result<()> {
        for (i, g) in globals.iter().enumerate() {
            self.trend[i].copy_from(g)?;
            self.backup[i].copy_from(g)?;
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        f64::from(self.log_alpha.values()[0]).exp()
    }

    pub fn log_alpha(&self) -> f32 {
        self.log_alpha.values()[0]
    }

    pub fn set_log_alpha(&mut self, v: f32) {
        self.log_alpha.values_mut()[0] = v.max(LOG_ALPHA_MIN);
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub(crate) fn set_steps(&mut self, steps: u64) {
        self.steps = steps;
    }

    pub fn replay(&self) -> &Replay {
        &self.replay
    }

    pub fn remember(&mut self, t: &Transition, source: u32) -> Result<()> {
        self.replay.push(t, source)
    }

    /// Whether enough transitions are stored to train.
    pub fn ready(&self) -> bool {
        self.replay.len() >= self.cfg.batch_size.max(self.cfg.warmup)
    }

    fn policy_eval(&self, obs: ArrayView2<f32>) -> Result<PolicyEval> {
        let logits = forward_batch(&self.policy_spec, &self.policy, obs)?.output().clone();
        Ok(PolicyEval {
            probs: softmax_rows(&logits),
            logp: log_softmax_rows(&logits),
        })
    }

    pub fn action_probs(&self, obs: &[f32]) -> Result<Vec<f32>> {
        let x = ArrayView2::from_shape((1, obs.len()), obs).map_err(|_| Error::Dimension {
            expected: self.policy_spec.input,
            got: obs.len(),
        })?;
        Ok(self.policy_eval(x)?.probs.row(0).to_vec())
    }

    pub fn select_action(&mut self, obs: &[f32], mode: ActionMode) -> Result<usize> {
        let probs = self.action_probs(obs)?;
        Ok(match mode {
            ActionMode::Greedy => argmax(&probs),
            ActionMode::Sample => sample_categorical(&probs, &mut self.rng),
        })
    }

    fn q_min(&self, nets: &[ParamSet; 2], obs: ArrayView2<f32>) -> Result<Array2<f32>> {
        let a = forward_batch(&self.trend_spec, &nets[0], obs)?;
        let b = forward_batch(&self.trend_spec, &nets[1], obs)?;
        Ok(elementwise_min(a.output(), b.output()))
    }

    /// `V(s) = π(s)ᵀ[min(χ̄₁, χ̄₂)(s) − α log π(s)]` for every row.
    pub fn soft_values(&self, obs: ArrayView2<f32>) -> Result<Array1<f32>> {
        let pe = self.policy_eval(obs)?;
        let q = self.q_min(&self.backup, obs)?;
        let alpha = self.alpha() as f32;
        let mut inner = q;
        inner.zip_mut_with(&pe.logp, |q, &lp| *q -= alpha * lp);
        inner.zip_mut_with(&pe.probs, |v, &p| *v *= p);
        Ok(inner.sum_axis(Axis(1)))
    }

    pub fn soft_value(&self, obs: &[f32]) -> Result<f64> {
        let x = ArrayView2::from_shape((1, obs.len()), obs).map_err(|_| Error::Dimension {
            expected: self.policy_spec.input,
            got: obs.len(),
        })?;
        Ok(f64::from(self.soft_values(x)?[0]))
    }

    fn targets(&self, batch: &Batch) -> Result<Array1<f32>> {
        let v = self.soft_values(batch.next_obs.view())?;
        let gamma = self.cfg.gamma as f32;
        Ok(Array1::from_iter((0..batch.len()).map(|b| {
            let boot = if batch.terminals[b] { 0.0 } else { gamma * v[b] };
            batch.rewards[b] + boot
        })))
    }

    /// Loss of trend network `i` and the gradient of that loss w.r.t. its outputs.
    fn trend_loss_grad(&self, i: usize, batch: &Batch, y: &Array1<f32>) -> Result<(f64, crate::nn::Trace<f32>, Array2<f32>)> {
        let trace = forward_batch(&self.trend_spec, &self.trend[i], batch.obs.view())?;
        let q = trace.output();
        let n = batch.len();
        let mut dy = Array2::zeros(q.dim());
        let mut loss = 0.0f64;
        for b in 0..n {
            let a = batch.actions[b];
            let diff = q[[b, a]] - y[b];
            loss += 0.5 * f64::from(diff) * f64::from(diff);
            dy[[b, a]] = diff / n as f32;
        }
        Ok((loss / n as f64, trace, dy))
    }

    /// Mean `½(χθᵢ(s,a) − (r + γ V(s')))²` for both trend networks, no update.
    pub fn trend_losses(&self, batch: &Batch) -> Result<[f64; 2]> {
        self.check_batch(batch)?;
        let y = self.targets(batch)?;
        Ok([self.trend_loss_grad(0, batch, &y)?.0, self.trend_loss_grad(1, batch, &y)?.0])
    }

    fn step_params(&mut self, which: Which, grads: &mut ParamSet) -> Result<()> {
        if let Some(c) = self.cfg.grad_clip {
            grads.clip_norm(c);
        }
        let lr = self.cfg.lr as f32;
        match which {
            Which::Policy => self.opt_policy.step(&mut self.policy, grads, lr),
            Which::Trend(i) => self.opt_trend[i].step(&mut self.trend[i], grads, lr),
        }
    }

    pub fn trend_update(&mut self, batch: &Batch) -> Result<[f64; 2]> {
        self.check_batch(batch)?;
        let y = self.targets(batch)?;
        let mut out = [0.0; 2];
        for (i, slot) in out.iter_mut().enumerate() {
            let (loss, trace, dy) = self.trend_loss_grad(i, batch, &y)?;
            let mut g = backward_batch(&self.trend_spec, &self.trend[i], &trace, dy.view())?;
            self.step_params(Which::Trend(i), &mut g)?;
            *slot = loss;
        }
        Ok(out)
    }

    /// Policy objective, its logit gradient, and the policy quantities used.
    fn policy_loss_grad(&self, obs: ArrayView2<f32>) -> Result<(f64, crate::nn::Trace<f32>, Array2<f32>, PolicyEval)> {
        let trace = forward_batch(&self.policy_spec, &self.policy, obs)?;
        let logits = trace.output();
        let pe = PolicyEval {
            probs: softmax_rows(logits),
            logp: log_softmax_rows(logits),
        };
        let q = self.q_min(&self.trend, obs)?;
        let alpha = self.alpha() as f32;
        let (n, k) = q.dim();
        let mut dz = Array2::zeros((n, k));
        let mut loss = 0.0f64;
        for b in 0..n {
            let g: Vec<f32> = (0..k).map(|a| alpha * pe.logp[[b, a]] - q[[b, a]]).collect();
            let f: f32 = (0..k).map(|a| pe.probs[[b, a]] * g[a]).sum();
            loss += f64::from(f);
            for a in 0..k {
                dz[[b, a]] = pe.probs[[b, a]] * (g[a] - f) / n as f32;
            }
        }
        Ok((loss / n as f64, trace, dz, pe))
    }

    /// Mean `π(s)ᵀ(α log π(s) − min(χθ₁, χθ₂)(s))` over the batch states, no update.
    pub fn policy_loss(&self, batch: &Batch) -> Result<f64> {
        self.check_batch(batch)?;
        Ok(self.policy_loss_grad(batch.obs.view())?.0)
    }

    pub fn policy_update(&mut self, batch: &Batch) -> Result<f64> {
        Ok(self.policy_update_inner(batch)?.0)
    }

    fn policy_update_inner(&mut self, batch: &Batch) -> Result<(f64, PolicyEval)> {
        self.check_batch(batch)?;
        let (loss, trace, dz, pe) = self.policy_loss_grad(batch.obs.view())?;
        let mut g = backward_batch(&self.policy_spec, &self.policy, &trace, dz.view())?;
        self.step_params(Which::Policy, &mut g)?;
        Ok((loss, pe))
    }

    fn mean_entropy(pe: &PolicyEval) -> f64 {
        let mut h = pe.probs.clone();
        h.zip_mut_with(&pe.logp, |p, &lp| *p *= -lp);
        f64::from(h.sum()) / pe.probs.nrows() as f64
    }

    /// `α · mean(H(π(s)) − H̄)`, which equals the mean of `π(s)ᵀ[−α(log π(s) + H̄)]`.
    pub fn alpha_loss(&self, batch: &Batch) -> Result<f64> {
        self.check_batch(batch)?;
        let pe = self.policy_eval(batch.obs.view())?;
        Ok(self.alpha() * (Self::mean_entropy(&pe) - self.cfg.target_entropy))
    }

    fn alpha_step(&mut self, entropy: f64) -> Result<f64> {
        let loss = self.alpha() * (entropy - self.cfg.target_entropy);
        // d/d(log α) of α·c is α·c.
        let grad = ParamSet::from_parts(vec![vec![1]], vec![loss as f32])?;
        self.opt_alpha.step(&mut self.log_alpha, &grad, self.cfg.alpha_lr as f32)?;
        let v = self.log_alpha.values()[0];
        self.set_log_alpha(v);
        Ok(loss)
    }

    pub fn alpha_update(&mut self, batch: &Batch) -> Result<f64> {
        self.check_batch(batch)?;
        let pe = self.policy_eval(batch.obs.view())?;
        self.alpha_step(Self::mean_entropy(&pe))
    }

    fn check_batch(&self, batch: &Batch) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::InsufficientReplay { have: 0, need: 1 });
        }
        if batch.obs.ncols() != self.policy_spec.input {
            return Err(Error::Dimension {
                expected: self.policy_spec.input,
                got: batch.obs.ncols(),
            });
        }
        if let Some(&a) = batch.actions.iter().find(|&&a| a >= self.policy_spec.output) {
            return Err(Error::Domain(format!("action {a} outside {} actions", self.policy_spec.output)));
        }
        Ok(())
    }

    /// Trend, policy and temperature updates on one sampled batch.
    pub fn train_on(&mut self, batch: &Batch) -> Result<Diagnostics> {
        let trend_loss = self.trend_update(batch)?;
        let (policy_loss, pe) = self.policy_update_inner(batch)?;
        let entropy = Self::mean_entropy(&pe);
        let alpha_loss = self.alpha_step(entropy)?;
        if let TargetMode::Polyak { tau } = self.cfg.target {
            for i in 0..2 {
                let t = tau as f32;
                let src = self.trend[i].values().to_vec();
                self.backup[i]
                    .values_mut()
                    .iter_mut()
                    .zip(src)
                    .for_each(|(b, s)| *b = t * s + (1.0 - t) * *b);
            }
        }
        self.steps += 1;
        Ok(Diagnostics {
            trend_loss,
            policy_loss,
            alpha_loss,
            alpha: self.alpha(),
            entropy,
        })
    }

    /// Samples a batch and trains on it. Fails without side effects when the
    /// replay memory holds fewer than `batch_size` transitions.
    pub fn train_step(&mut self) -> Result<Diagnostics> {
        let batch = self.replay.sample(self.cfg.batch_size, &mut self.rng)?;
        self.train_on(&batch)
    }

    /// Policy, trend 1 and trend 2 concatenated, for full-model averaging.
    pub fn full_model(&self) -> ParamSet {
        let parts = [&self.policy, &self.trend[0], &self.trend[1]];
        let shapes = parts.iter().flat_map(|p| p.shapes().to_vec()).collect();
        let data = parts.iter().flat_map(|p| p.values().to_vec()).collect();
        ParamSet::from_parts(shapes, data).expect("concatenated layout is consistent")
    }

    pub fn set_full_model(&mut self, full: &ParamSet) -> Result<()> {
        self.full_model().ensure_layout(full)?;
        let v = full.values();
        let (np, nt) = (self.policy.len(), self.trend[0].len());
        self.policy.values_mut().copy_from_slice(&v[..np]);
        self.trend[0].values_mut().copy_from_slice(&v[np..np + nt]);
        self.trend[1].values_mut().copy_from_slice(&v[np + nt..]);
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Which {
    Policy,
    Trend(usize),
}
