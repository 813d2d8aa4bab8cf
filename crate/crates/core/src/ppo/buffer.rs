use crate::config::AdvantageMode;
use crate::error::{Error, Result};
use crate::nn::LstmState;
use crate::scalar::Scalar;

use super::nets::ValueNet;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub observation: Vec<T>,
    /// Pre-logistic Gaussian sample.
    pub action: Vec<T>,
    pub reward: T,
    pub next_observation: Vec<T>,
    pub log_prob_old: T,
    pub value_estimate: T,
    pub advantage: T,
    pub return_target: T,
    /// Episode terminated at this step.
    pub done: bool,
    /// Recurrent state the policy held before this step.
    pub state: LstmState<T>,
}

/// Transitions in collection order. Trajectory boundaries are episode ends
/// and the end of each environment's slice of the rollout.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer<T> {
    pub transitions: Vec<Transition<T>>,
    /// Exclusive end index of every trajectory chunk.
    chunk_ends: Vec<usize>,
}

impl<T: Scalar> RolloutBuffer<T> {
    pub fn new() -> Self {
        Self { transitions: Vec::new(), chunk_ends: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn push(&mut self, t: Transition<T>) {
        let done = t.done;
        self.transitions.push(t);
        if done {
            self.chunk_ends.push(self.transitions.len());
        }
    }

    /// Marks the current end as a trajectory boundary (truncation).
    pub fn close_chunk(&mut self) {
        let n = self.transitions.len();
        if n > 0 && self.chunk_ends.last() != Some(&n) {
            self.chunk_ends.push(n);
        }
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
        self.chunk_ends.clear();
    }

    /// `[start, end)` ranges of each trajectory chunk.
    pub fn chunks(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for &e in self.chunk_ends.iter().chain(std::iter::once(&self.transitions.len())) {
            if e > start {
                out.push((start, e));
                start = e;
            }
        }
        out
    }

    /// Chunks cut into pieces of at most `len` steps.
    pub fn segments(&self, len: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (s, e) in self.chunks() {
            let mut a = s;
            while a < e {
                let b = (a + len).min(e);
                out.push((a, b));
                a = b;
            }
        }
        out
    }

    /// Fills `value_estimate`, `advantage` and `return_target` using the
    /// current critic.
    pub fn compute_advantages(&mut self, value_net: &ValueNet<T>, gamma: T, mode: AdvantageMode, lambda: T) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        for t in &mut self.transitions {
            t.value_estimate = value_net.value(&t.observation)?;
        }
        for (s, e) in self.chunks() {
            let last = &self.transitions[e - 1];
            let bootstrap = if last.done { T::zero() } else { value_net.value(&last.next_observation)? };
            let rewards: Vec<T> = self.transitions[s..e].iter().map(|t| t.reward).collect();
            let values: Vec<T> = self.transitions[s..e].iter().map(|t| t.value_estimate).collect();
            let adv = match mode {
                AdvantageMode::Direct => direct_advantages(&rewards, &values, bootstrap, gamma),
                AdvantageMode::Gae => gae_advantages(&rewards, &values, bootstrap, gamma, lambda),
            };
            for (t, a) in self.transitions[s..e].iter_mut().zip(adv) {
                t.advantage = a;
                t.return_target = a + t.value_estimate;
            }
        }
        Ok(())
    }

    /// Shifts and scales advantages to zero mean, unit deviation.
    pub fn normalize_advantages(&mut self) {
        let n = T::from_count(self.len().max(1));
        let mean = self.transitions.iter().map(|t| t.advantage).sum::<T>() / n;
        let var = self.transitions.iter().map(|t| (t.advantage - mean).powi(2)).sum::<T>() / n;
        let std = var.sqrt() + T::lit(1e-8);
        for t in &mut self.transitions {
            t.advantage = (t.advantage - mean) / std;
        }
    }
}

/// `A_t = Σ_{t'≥t} γ^{t'−t} (r_{t'} − V_{t'}) + γ^{T−t+1} V_boot` for one
/// trajectory chunk, by the backward recursion `A_t = r_t − V_t + γ A_{t+1}`.
pub fn direct_advantages<T: Scalar>(rewards: &[T], values: &[T], bootstrap: T, gamma: T) -> Vec<T> {
    let mut out = vec![T::zero(); rewards.len()];
    let mut acc = bootstrap;
    for k in (0..rewards.len()).rev() {
        acc = rewards[k] - values[k] + gamma * acc;
        out[k] = acc;
    }
    out
}

/// Generalized advantage estimation over one chunk.
pub fn gae_advantages<T: Scalar>(rewards: &[T], values: &[T], bootstrap: T, gamma: T, lambda: T) -> Vec<T> {
    let mut out = vec![T::zero(); rewards.len()];
    let mut acc = T::zero();
    let mut next_v = bootstrap;
    for k in (0..rewards.len()).rev() {
        let delta = rewards[k] + gamma * next_v - values[k];
        acc = delta + gamma * lambda * acc;
        out[k] = acc;
        next_v = values[k];
    }
    out
}
