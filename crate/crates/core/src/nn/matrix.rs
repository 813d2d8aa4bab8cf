use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    /// `W x + b`.
    pub fn affine(&self, x: &[T], b: &[T]) -> Vec<T> {
        debug_assert_eq!(x.len(), self.cols);
        self.data
            .chunks_exact(self.cols)
            .zip(b)
            .map(|(row, &bias)| row.iter().zip(x).fold(bias, |acc, (&w, &xi)| acc + w * xi))
            .collect()
    }

    /// `out += Wᵀ g`.
    pub fn add_transpose_mul(&self, g: &[T], out: &mut [T]) {
        for (row, &gi) in self.data.chunks_exact(self.cols).zip(g) {
            for (o, &w) in out.iter_mut().zip(row) {
                *o += w * gi;
            }
        }
    }

    /// `self += g xᵀ`.
    pub fn add_outer(&mut self, g: &[T], x: &[T]) {
        for (row, &gi) in self.data.chunks_exact_mut(self.cols).zip(g) {
            for (w, &xi) in row.iter_mut().zip(x) {
                *w += gi * xi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_and_transpose() {
        let m = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(m.affine(&[1.0, 0.0, -1.0], &[0.5, -0.5]), vec![-1.5, -2.5]);
        let mut out = vec![0.0; 3];
        m.add_transpose_mul(&[1.0, 1.0], &mut out);
        assert_eq!(out, vec![5.0, 7.0, 9.0]);
        let mut z = Matrix::zeros(2, 3);
        z.add_outer(&[1.0, 2.0], &[1.0, 0.0, 3.0]);
        assert_eq!(z.data, vec![1.0, 0.0, 3.0, 2.0, 0.0, 6.0]);
        assert_eq!(Matrix::<f64>::identity(2).data, vec![1.0, 0.0, 0.0, 1.0]);
    }
}
