//! Small differentiable-network engine: dense and LSTM layers with exact
//! reverse-mode gradients, the Adam optimizer, a finite-difference gradient
//! checker and a text checkpoint format.
//!
//! Gradients are stored in a value of the same type as the layer they belong
//! to, so the [`Parameterized`] visitor walks parameters and gradients in
//! lockstep.

mod adam;
mod checkpoint;
mod dense;
mod gradcheck;
mod lstm;
mod matrix;

pub use adam::{clip_global_norm, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_SCHEMA_VERSION};
pub use dense::{Activation, DenseCache, DenseLayer};
pub use gradcheck::{grad_check, GradCheckReport};
pub use lstm::{LstmCache, LstmCell, LstmState};
pub use matrix::Matrix;

use rand::Rng;

use crate::scalar::Scalar;

/// Walks named parameter blocks in a fixed order.
pub trait Parameterized<T> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[T]));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [T]));

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, b| n += b.len());
        n
    }

    /// Same shape, all zeros. Used as a gradient accumulator.
    fn zeroed(&self) -> Self
    where
        Self: Clone,
        T: Scalar,
    {
        let mut z = self.clone();
        z.visit_mut("", &mut |_, b| b.fill(T::zero()));
        z
    }

    fn flatten(&self) -> Vec<T>
    where
        T: Copy,
    {
        let mut out = Vec::new();
        self.visit("", &mut |_, b| out.extend_from_slice(b));
        out
    }
}

/// Dotted block name under `prefix`.
pub fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Uniform in `[-1/√fan_in, 1/√fan_in]`.
pub(crate) fn init_uniform<T: Scalar, R: Rng>(rng: &mut R, len: usize, fan_in: usize) -> Vec<T> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    (0..len).map(|_| T::lit(rng.gen_range(-bound..=bound))).collect()
}

/// Elementwise `acc += g` over every block.
pub fn accumulate<T: Scalar, P: Parameterized<T>>(acc: &mut P, g: &P) {
    let mut blocks = Vec::new();
    g.visit("", &mut |_, b| blocks.push(b.to_vec()));
    let mut k = 0;
    acc.visit_mut("", &mut |_, b| {
        for (a, &x) in b.iter_mut().zip(&blocks[k]) {
            *a += x;
        }
        k += 1;
    });
}
