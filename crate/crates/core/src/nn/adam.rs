use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::Parameterized;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 3e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment accumulators for one parameter set, one entry per block.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new<P: Parameterized<T>>(config: AdamConfig, params: &P) -> Self {
        let mut m = Vec::new();
        params.visit("", &mut |_, b| m.push(vec![T::zero(); b.len()]));
        Self { config, v: m.clone(), m, t: 0 }
    }

    /// One bias-corrected update. The step counter is advanced before the
    /// correction, so the first call divides by `1 − β`.
    pub fn step<P: Parameterized<T>>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        let mut g_blocks: Vec<Vec<T>> = Vec::with_capacity(self.m.len());
        grads.visit("", &mut |_, b| g_blocks.push(b.to_vec()));
        let shapes_ok = g_blocks.len() == self.m.len() && g_blocks.iter().zip(&self.m).all(|(g, m)| g.len() == m.len());
        if !shapes_ok {
            let actual = g_blocks.iter().map(Vec::len).sum();
            return Err(Error::Dimension { context: "adam gradients", expected: self.m.iter().map(Vec::len).sum(), actual });
        }
        let mut p_lens = Vec::new();
        params.visit("", &mut |_, b| p_lens.push(b.len()));
        if p_lens.len() != self.m.len() || p_lens.iter().zip(&self.m).any(|(&l, m)| l != m.len()) {
            return Err(Error::Dimension { context: "adam parameters", expected: self.m.len(), actual: p_lens.len() });
        }

        self.t += 1;
        let c = self.config;
        let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
        let (lr, eps) = (T::lit(c.learning_rate), T::lit(c.eps));
        let one = T::one();
        let corr1 = one - T::lit(c.beta1.powi(self.t.min(i32::MAX as u64) as i32));
        let corr2 = one - T::lit(c.beta2.powi(self.t.min(i32::MAX as u64) as i32));

        let (m_all, v_all) = (&mut self.m, &mut self.v);
        let mut k = 0;
        params.visit_mut("", &mut |_, p| {
            let (m, v, g) = (&mut m_all[k], &mut v_all[k], &g_blocks[k]);
            for j in 0..p.len() {
                m[j] = b1 * m[j] + (one - b1) * g[j];
                v[j] = b2 * v[j] + (one - b2) * g[j] * g[j];
                let m_hat = m[j] / corr1;
                let v_hat = v[j] / corr2;
                p[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            k += 1;
        });
        Ok(())
    }
}

/// Rescales `grads` so their joint L2 norm is at most `max_norm`. Returns the
/// norm before scaling.
pub fn clip_global_norm<T: Scalar, P: Parameterized<T>>(grads: &mut P, max_norm: T) -> T {
    let mut sq = T::zero();
    grads.visit("", &mut |_, b| {
        for &g in b {
            sq += g * g;
        }
    });
    let norm = sq.sqrt();
    if norm > max_norm && norm.is_finite() {
        let s = max_norm / norm;
        grads.visit_mut("", &mut |_, b| b.iter_mut().for_each(|g| *g *= s));
    }
    norm
}
