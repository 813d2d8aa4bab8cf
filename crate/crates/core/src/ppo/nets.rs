//! Actor and critic networks.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{join, Activation, DenseCache, DenseLayer, LstmCache, LstmCell, LstmState, Parameterized};
use crate::scalar::Scalar;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Feature extractor in front of the action head.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyBody<T> {
    Lstm(LstmCell<T>),
    Dense(DenseLayer<T>),
}

/// Gaussian policy: body → linear head giving per-UAV means, plus a
/// state-independent learned log standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet<T> {
    pub body: PolicyBody<T>,
    pub head: DenseLayer<T>,
    pub log_std: Vec<T>,
}

#[derive(Debug, Clone)]
pub enum StepCache<T> {
    Lstm(LstmCache<T>, DenseCache<T>),
    Dense(DenseCache<T>, DenseCache<T>),
}

/// Hidden width of a dense body whose parameter count matches an LSTM body
/// of width `hidden` (both followed by the same kind of head).
pub fn dense_matched_width(obs_dim: usize, hidden: usize, n_actions: usize) -> usize {
    let lstm = 4 * hidden * (hidden + obs_dim) + 4 * hidden + n_actions * hidden;
    let per_unit = obs_dim + 1 + n_actions;
    ((lstm as f64 / per_unit as f64).round() as usize).max(1)
}

impl<T: Scalar> PolicyNet<T> {
    pub fn new<R: Rng>(obs_dim: usize, hidden: usize, n_actions: usize, recurrent: bool, log_std_init: T, rng: &mut R) -> Self {
        let (body, width) = if recurrent {
            (PolicyBody::Lstm(LstmCell::new(obs_dim, hidden, rng)), hidden)
        } else {
            let w = dense_matched_width(obs_dim, hidden, n_actions);
            (PolicyBody::Dense(DenseLayer::new(obs_dim, w, Activation::Tanh, rng)), w)
        };
        Self { body, head: DenseLayer::new(width, n_actions, Activation::Identity, rng), log_std: vec![log_std_init; n_actions] }
    }

    pub fn is_recurrent(&self) -> bool {
        matches!(self.body, PolicyBody::Lstm(_))
    }

    pub fn obs_dim(&self) -> usize {
        match &self.body {
            PolicyBody::Lstm(c) => c.input_size(),
            PolicyBody::Dense(d) => d.input_size(),
        }
    }

    pub fn n_actions(&self) -> usize {
        self.head.output_size()
    }

    /// Zero recurrent state; empty for a dense body.
    pub fn initial_state(&self) -> LstmState<T> {
        match &self.body {
            PolicyBody::Lstm(c) => LstmState::zeros(c.hidden_size()),
            PolicyBody::Dense(_) => LstmState::zeros(0),
        }
    }

    /// Action means for one observation and the next recurrent state.
    pub fn step(&self, obs: &[T], state: &LstmState<T>) -> Result<(Vec<T>, LstmState<T>, StepCache<T>)> {
        match &self.body {
            PolicyBody::Lstm(cell) => {
                let (next, lc) = cell.forward(obs, state)?;
                let (mean, hc) = self.head.forward(&next.h)?;
                Ok((mean, next, StepCache::Lstm(lc, hc)))
            }
            PolicyBody::Dense(layer) => {
                let (feat, dc) = layer.forward(obs)?;
                let (mean, hc) = self.head.forward(&feat)?;
                Ok((mean, state.clone(), StepCache::Dense(dc, hc)))
            }
        }
    }

    /// Back-propagation through time over one contiguous sequence whose
    /// caches came from consecutive [`PolicyNet::step`] calls. The initial
    /// state is treated as a constant. `log_std` gradients are the caller's.
    pub fn backward_sequence(&self, caches: &[StepCache<T>], grad_means: &[Vec<T>], grads: &mut PolicyNet<T>) -> Result<()> {
        if caches.len() != grad_means.len() {
            return Err(Error::LengthMismatch { expected: caches.len(), actual: grad_means.len() });
        }
        let hidden = self.initial_state().len();
        let mut dh = vec![T::zero(); hidden];
        let mut dc = vec![T::zero(); hidden];
        for (cache, gm) in caches.iter().zip(grad_means).rev() {
            match (cache, &self.body, &mut grads.body) {
                (StepCache::Lstm(lc, hc), PolicyBody::Lstm(cell), PolicyBody::Lstm(gcell)) => {
                    let g_feat = self.head.backward(hc, gm, &mut grads.head)?;
                    let gh: Vec<T> = g_feat.iter().zip(&dh).map(|(&a, &b)| a + b).collect();
                    let (_, prev) = cell.backward(lc, &gh, &dc, gcell)?;
                    dh = prev.h;
                    dc = prev.c;
                }
                (StepCache::Dense(dcache, hc), PolicyBody::Dense(layer), PolicyBody::Dense(glayer)) => {
                    let g_feat = self.head.backward(hc, gm, &mut grads.head)?;
                    layer.backward(dcache, &g_feat, glayer)?;
                }
                _ => return Err(Error::StaleCache),
            }
        }
        Ok(())
    }
}

impl<T: Scalar> Parameterized<T> for PolicyNet<T> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[T])) {
        match &self.body {
            PolicyBody::Lstm(c) => c.visit(&join(prefix, "lstm"), f),
            PolicyBody::Dense(d) => d.visit(&join(prefix, "dense"), f),
        }
        self.head.visit(&join(prefix, "head"), f);
        f(&join(prefix, "log_std"), &self.log_std);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [T])) {
        match &mut self.body {
            PolicyBody::Lstm(c) => c.visit_mut(&join(prefix, "lstm"), f),
            PolicyBody::Dense(d) => d.visit_mut(&join(prefix, "dense"), f),
        }
        self.head.visit_mut(&join(prefix, "head"), f);
        f(&join(prefix, "log_std"), &mut self.log_std);
    }
}

/// Diagonal Gaussian log-density of `action`.
pub fn gaussian_log_prob<T: Scalar>(action: &[T], mean: &[T], log_std: &[T]) -> T {
    let half = T::lit(0.5);
    action
        .iter()
        .zip(mean)
        .zip(log_std)
        .map(|((&a, &m), &ls)| {
            let z = (a - m) / ls.exp();
            -half * z * z - ls - half * T::lit(LN_2PI)
        })
        .sum()
}

/// `(∂ log π / ∂ mean, ∂ log π / ∂ log_std)`.
pub fn gaussian_log_prob_grad<T: Scalar>(action: &[T], mean: &[T], log_std: &[T]) -> (Vec<T>, Vec<T>) {
    let mut gm = Vec::with_capacity(mean.len());
    let mut gs = Vec::with_capacity(mean.len());
    for ((&a, &m), &ls) in action.iter().zip(mean).zip(log_std) {
        let var = (ls + ls).exp();
        let d = a - m;
        gm.push(d / var);
        gs.push(d * d / var - T::one());
    }
    (gm, gs)
}

/// Feed-forward critic: two tanh layers and a scalar output.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNet<T> {
    pub layers: Vec<DenseLayer<T>>,
}

#[derive(Debug, Clone)]
pub struct ValueCache<T>(Vec<DenseCache<T>>);

impl<T: Scalar> ValueNet<T> {
    pub fn new<R: Rng>(obs_dim: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            layers: vec![
                DenseLayer::new(obs_dim, hidden, Activation::Tanh, rng),
                DenseLayer::new(hidden, hidden, Activation::Tanh, rng),
                DenseLayer::new(hidden, 1, Activation::Identity, rng),
            ],
        }
    }

    pub fn forward(&self, obs: &[T]) -> Result<(T, ValueCache<T>)> {
        let mut x = obs.to_vec();
        let mut caches = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            let (y, c) = l.forward(&x)?;
            caches.push(c);
            x = y;
        }
        Ok((x[0], ValueCache(caches)))
    }

    pub fn value(&self, obs: &[T]) -> Result<T> {
        Ok(self.forward(obs)?.0)
    }

    pub fn backward(&self, cache: &ValueCache<T>, grad_v: T, grads: &mut ValueNet<T>) -> Result<()> {
        if cache.0.len() != self.layers.len() {
            return Err(Error::StaleCache);
        }
        let mut g = vec![grad_v];
        for ((l, c), gl) in self.layers.iter().zip(&cache.0).zip(grads.layers.iter_mut()).rev() {
            g = l.backward(c, &g, gl)?;
        }
        Ok(())
    }
}

impl<T: Scalar> Parameterized<T> for ValueNet<T> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[T])) {
        for (i, l) in self.layers.iter().enumerate() {
            l.visit(&join(prefix, &format!("layer{i}")), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [T])) {
        for (i, l) in self.layers.iter_mut().enumerate() {
            l.visit_mut(&join(prefix, &format!("layer{i}")), f);
        }
    }
}
