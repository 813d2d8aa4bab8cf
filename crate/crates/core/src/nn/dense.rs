use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{init_uniform, join, Matrix, Parameterized};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

/// Affine map followed by an elementwise activation.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache<T> {
    input: Vec<T>,
    output: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn new<R: Rng>(input: usize, output: usize, activation: Activation, rng: &mut R) -> Self {
        Self {
            weight: Matrix::from_vec(output, input, init_uniform(rng, output * input, input)),
            bias: init_uniform(rng, output, input),
            activation,
        }
    }

    pub fn input_size(&self) -> usize {
        self.weight.cols
    }

    pub fn output_size(&self) -> usize {
        self.weight.rows
    }

    pub fn forward(&self, x: &[T]) -> Result<(Vec<T>, DenseCache<T>)> {
        if x.len() != self.input_size() {
            return Err(Error::Dimension { context: "dense input", expected: self.input_size(), actual: x.len() });
        }
        let mut y = self.weight.affine(x, &self.bias);
        if self.activation == Activation::Tanh {
            y.iter_mut().for_each(|v| *v = v.tanh());
        }
        Ok((y.clone(), DenseCache { input: x.to_vec(), output: y }))
    }

    /// Accumulates parameter gradients into `grads`; returns `∂L/∂x`.
    pub fn backward(&self, cache: &DenseCache<T>, grad_out: &[T], grads: &mut DenseLayer<T>) -> Result<Vec<T>> {
        if cache.output.len() != self.output_size() || grad_out.len() != self.output_size() {
            return Err(Error::StaleCache);
        }
        let delta: Vec<T> = match self.activation {
            Activation::Identity => grad_out.to_vec(),
            Activation::Tanh => grad_out.iter().zip(&cache.output).map(|(&g, &y)| g * (T::one() - y * y)).collect(),
        };
        grads.weight.add_outer(&delta, &cache.input);
        for (b, &d) in grads.bias.iter_mut().zip(&delta) {
            *b += d;
        }
        let mut grad_in = vec![T::zero(); self.input_size()];
        self.weight.add_transpose_mul(&delta, &mut grad_in);
        Ok(grad_in)
    }
}

impl<T: Scalar> Parameterized<T> for DenseLayer<T> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[T])) {
        f(&join(prefix, "weight"), &self.weight.data);
        f(&join(prefix, "bias"), &self.bias);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [T])) {
        f(&join(prefix, "weight"), &mut self.weight.data);
        f(&join(prefix, "bias"), &mut self.bias);
    }
}
