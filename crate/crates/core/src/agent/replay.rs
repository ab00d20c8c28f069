use ndarray::Array2;
use rand::Rng;

use crate::env::Transition;
use crate::error::{Error, Result};

/// Fixed-capacity ring buffer of transitions with flat storage.
#[derive(Debug, Clone)]
pub struct Replay {
    capacity: usize,
    obs_dim: usize,
    obs: Vec<f32>,
    next_obs: Vec<f32>,
    actions: Vec<usize>,
    rewards: Vec<f32>,
    terminals: Vec<bool>,
    /// Which environment produced each transition.
    sources: Vec<u32>,
    len: usize,
    head: usize,
}

/// A sampled minibatch, one row per transition.
#[derive(Debug, Clone)]
pub struct Batch {
    pub obs: Array2<f32>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f32>,
    pub next_obs: Array2<f32>,
    pub terminals: Vec<bool>,
    pub sources: Vec<u32>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Builds a batch directly from transitions, in order.
    pub fn from_transitions(ts: &[Transition]) -> Result<Self> {
        let dim = ts.first().map_or(0, |t| t.obs.len());
        let mut obs = Vec::with_capacity(ts.len() * dim);
        let mut next = Vec::with_capacity(ts.len() * dim);
        for t in ts {
            if t.obs.len() != dim || t.next_obs.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: t.obs.len().max(t.next_obs.len()),
                });
            }
            obs.extend_from_slice(&t.obs);
            next.extend_from_slice(&t.next_obs);
        }
        Ok(Self {
            obs: Array2::from_shape_vec((ts.len(), dim), obs).expect("sized above"),
            actions: ts.iter().map(|t| t.action).collect(),
            rewards: ts.iter().map(|t| t.reward as f32).collect(),
            next_obs: Array2::from_shape_vec((ts.len(), dim), next).expect("sized above"),
            terminals: ts.iter().map(|t| t.terminal).collect(),
            sources: vec![0; ts.len()],
        })
    }
}

impl Replay {
    pub fn new(capacity: usize, obs_dim: usize) -> Self {
        Self {
            capacity,
            obs_dim,
            obs: vec![0.0; capacity * obs_dim],
            next_obs: vec![0.0; capacity * obs_dim],
            actions: vec![0; capacity],
            rewards: vec![0.0; capacity],
            terminals: vec![false; capacity],
            sources: vec![0; capacity],
            len: 0,
            head: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, t: &Transition, source: u32) -> Result<()> {
        if t.obs.len() != self.obs_dim || t.next_obs.len() != self.obs_dim {
            return Err(Error::Dimension {
                expected: self.obs_dim,
                got: t.obs.len(),
            });
        }
        if self.capacity == 0 {
            return Ok(());
        }
        let i = self.head;
        let d = self.obs_dim;
        self.obs[i * d..(i + 1) * d].copy_from_slice(&t.obs);
        self.next_obs[i * d..(i + 1) * d].copy_from_slice(&t.next_obs);
        self.actions[i] = t.action;
        self.rewards[i] = t.reward as f32;
        self.terminals[i] = t.terminal;
        self.sources[i] = source;
        self.head = (self.head + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
        Ok(())
    }

    /// Uniform sample with replacement; requires at least `n` stored transitions.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Batch> {
        if self.len < n || n == 0 {
            return Err(Error::InsufficientReplay {
                have: self.len,
                need: n.max(1),
            });
        }
        let d = self.obs_dim;
        let mut obs = Array2::zeros((n, d));
        let mut next_obs = Array2::zeros((n, d));
        let mut b = Batch {
            obs: Array2::zeros((0, d)),
            actions: Vec::with_capacity(n),
            rewards: Vec::with_capacity(n),
            next_obs: Array2::zeros((0, d)),
            terminals: Vec::with_capacity(n),
            sources: Vec::with_capacity(n),
        };
        for row in 0..n {
            let i = rng.random_range(0..self.len);
            obs.row_mut(row)
                .as_slice_mut()
                .expect("standard layout")
                .copy_from_slice(&self.obs[i * d..(i + 1) * d]);
            next_obs
                .row_mut(row)
                .as_slice_mut()
                .expect("standard layout")
                .copy_from_slice(&self.next_obs[i * d..(i + 1) * d]);
            b.actions.push(self.actions[i]);
            b.rewards.push(self.rewards[i]);
            b.terminals.push(self.terminals[i]);
            b.sources.push(self.sources[i]);
        }
        b.obs = obs;
        b.next_obs = next_obs;
        Ok(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(x: f32) -> Transition {
        Transition {
            obs: vec![x, x],
            action: x as usize % 3,
            reward: f64::from(x),
            next_obs: vec![x + 1.0, x + 1.0],
            terminal: false,
        }
    }

    #[test]
    fn ring_keeps_latest() {
        let mut r = Replay::new(3, 2);
        for i in 0..5 {
            r.push(&t(i as f32), 0).unwrap();
        }
        assert_eq!(r.len(), 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let b = r.sample(3, &mut rng).unwrap();
            assert!(b.rewards.iter().all(|&x| x >= 2.0));
            for (row, &rew) in b.rewards.iter().enumerate() {
                assert_eq!(b.obs[[row, 0]], rew);
                assert_eq!(b.next_obs[[row, 1]], rew + 1.0);
            }
        }
    }

    #[test]
    fn refuses_small_buffer() {
        let mut r = Replay::new(10, 2);
        r.push(&t(1.0), 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(r.sample(2, &mut rng), Err(Error::InsufficientReplay { have: 1, need: 2 })));
        assert!(r.push(&Transition { obs: vec![1.0], ..t(0.0) }, 0).is_err());
    }
}
