use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};

use super::{init_uniform, join, Matrix, Parameterized};

/// Recurrent state carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> LstmState<T> {
    pub fn zeros(hidden: usize) -> Self {
        Self { h: vec![T::zero(); hidden], c: vec![T::zero(); hidden] }
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.h.iter().chain(&self.c).all(|v| v.is_finite())
    }
}

/// One LSTM cell. Every gate matrix acts on the concatenation `[h_{t-1}, x_t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell<T> {
    pub w_f: Matrix<T>,
    pub w_i: Matrix<T>,
    pub w_c: Matrix<T>,
    pub w_o: Matrix<T>,
    pub b_f: Vec<T>,
    pub b_i: Vec<T>,
    pub b_c: Vec<T>,
    pub b_o: Vec<T>,
}

/// Everything `backward` needs from the matching `forward`.
#[derive(Debug, Clone)]
pub struct LstmCache<T> {
    z: Vec<T>,
    f: Vec<T>,
    i: Vec<T>,
    g: Vec<T>,
    o: Vec<T>,
    c_prev: Vec<T>,
    tanh_c: Vec<T>,
}

impl<T: Scalar> LstmCell<T> {
    pub fn new<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let fan_in = hidden + input;
        let mat = |rng: &mut R| Matrix::from_vec(hidden, fan_in, init_uniform(rng, hidden * fan_in, fan_in));
        let (w_f, w_i, w_c, w_o) = (mat(rng), mat(rng), mat(rng), mat(rng));
        Self {
            w_f,
            w_i,
            w_c,
            w_o,
            b_f: init_uniform(rng, hidden, fan_in),
            b_i: init_uniform(rng, hidden, fan_in),
            b_c: init_uniform(rng, hidden, fan_in),
            b_o: init_uniform(rng, hidden, fan_in),
        }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        let m = Matrix::zeros(hidden, hidden + input);
        let b = vec![T::zero(); hidden];
        Self { w_f: m.clone(), w_i: m.clone(), w_c: m.clone(), w_o: m, b_f: b.clone(), b_i: b.clone(), b_c: b.clone(), b_o: b }
    }

    pub fn hidden_size(&self) -> usize {
        self.w_f.rows
    }

    pub fn input_size(&self) -> usize {
        self.w_f.cols - self.w_f.rows
    }

    pub fn forward(&self, x: &[T], prev: &LstmState<T>) -> Result<(LstmState<T>, LstmCache<T>)> {
        let hid = self.hidden_size();
        if x.len() != self.input_size() {
            return Err(Error::Dimension { context: "lstm input", expected: self.input_size(), actual: x.len() });
        }
        if prev.h.len() != hid || prev.c.len() != hid {
            return Err(Error::Dimension { context: "lstm state", expected: hid, actual: prev.h.len().max(prev.c.len()) });
        }
        let mut z = Vec::with_capacity(self.w_f.cols);
        z.extend_from_slice(&prev.h);
        z.extend_from_slice(x);

        let f: Vec<T> = self.w_f.affine(&z, &self.b_f).into_iter().map(sigmoid).collect();
        let i: Vec<T> = self.w_i.affine(&z, &self.b_i).into_iter().map(sigmoid).collect();
        let g: Vec<T> = self.w_c.affine(&z, &self.b_c).into_iter().map(|v| v.tanh()).collect();
        let o: Vec<T> = self.w_o.affine(&z, &self.b_o).into_iter().map(sigmoid).collect();

        let c: Vec<T> = (0..hid).map(|k| f[k] * prev.c[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<T> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<T> = (0..hid).map(|k| o[k] * tanh_c[k]).collect();

        let cache = LstmCache { z, f, i, g, o, c_prev: prev.c.clone(), tanh_c };
        Ok((LstmState { h, c }, cache))
    }

    /// Reverse pass for one step. Parameter gradients are accumulated into
    /// `grads`; returns `(∂L/∂x, ∂L/∂(h_{t-1}, C_{t-1}))`.
    pub fn backward(
        &self,
        cache: &LstmCache<T>,
        grad_h: &[T],
        grad_c: &[T],
        grads: &mut LstmCell<T>,
    ) -> Result<(Vec<T>, LstmState<T>)> {
        let hid = self.hidden_size();
        if cache.z.len() != self.w_f.cols || cache.f.len() != hid || grad_h.len() != hid || grad_c.len() != hid {
            return Err(Error::StaleCache);
        }
        let one = T::one();
        let mut d_f = vec![T::zero(); hid];
        let mut d_i = vec![T::zero(); hid];
        let mut d_g = vec![T::zero(); hid];
        let mut d_o = vec![T::zero(); hid];
        let mut dc_prev = vec![T::zero(); hid];
        for k in 0..hid {
            let (f, i, g, o, tc) = (cache.f[k], cache.i[k], cache.g[k], cache.o[k], cache.tanh_c[k]);
            let dc = grad_c[k] + grad_h[k] * o * (one - tc * tc);
            d_o[k] = grad_h[k] * tc * o * (one - o);
            d_f[k] = dc * cache.c_prev[k] * f * (one - f);
            d_i[k] = dc * g * i * (one - i);
            d_g[k] = dc * i * (one - g * g);
            dc_prev[k] = dc * f;
        }

        let z = &cache.z;
        grads.w_f.add_outer(&d_f, z);
        grads.w_i.add_outer(&d_i, z);
        grads.w_c.add_outer(&d_g, z);
        grads.w_o.add_outer(&d_o, z);
        for (b, d) in [
            (&mut grads.b_f, &d_f),
            (&mut grads.b_i, &d_i),
            (&mut grads.b_c, &d_g),
            (&mut grads.b_o, &d_o),
        ] {
            for (bk, &dk) in b.iter_mut().zip(d) {
                *bk += dk;
            }
        }

        let mut dz = vec![T::zero(); z.len()];
        self.w_f.add_transpose_mul(&d_f, &mut dz);
        self.w_i.add_transpose_mul(&d_i, &mut dz);
        self.w_c.add_transpose_mul(&d_g, &mut dz);
        self.w_o.add_transpose_mul(&d_o, &mut dz);
        let dx = dz.split_off(hid);
        Ok((dx, LstmState { h: dz, c: dc_prev }))
    }
}

impl<T: Scalar> Parameterized<T> for LstmCell<T> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[T])) {
        f(&join(prefix, "w_f"), &self.w_f.data);
        f(&join(prefix, "w_i"), &self.w_i.data);
        f(&join(prefix, "w_c"), &self.w_c.data);
        f(&join(prefix, "w_o"), &self.w_o.data);
        f(&join(prefix, "b_f"), &self.b_f);
        f(&join(prefix, "b_i"), &self.b_i);
        f(&join(prefix, "b_c"), &self.b_c);
        f(&join(prefix, "b_o"), &self.b_o);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &mut [T])) {
        f(&join(prefix, "w_f"), &mut self.w_f.data);
        f(&join(prefix, "w_i"), &mut self.w_i.data);
        f(&join(prefix, "w_c"), &mut self.w_c.data);
        f(&join(prefix, "w_o"), &mut self.w_o.data);
        f(&join(prefix, "b_f"), &mut self.b_f);
        f(&join(prefix, "b_i"), &mut self.b_i);
        f(&join(prefix, "b_c"), &mut self.b_c);
        f(&join(prefix, "b_o"), &mut self.b_o);
    }
}
