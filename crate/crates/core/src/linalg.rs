//! Small dense symmetric solves used by the Newton steps.

use crate::scalar::Scalar;

/// Row-major dense square matrix.
#[derive(Debug, Clone)]
pub(crate) struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = self.data[i * self.n + j] + v;
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Solves `(self + shift * I) x = rhs` by Cholesky; `None` if not positive definite.
    pub fn cholesky_solve(&self, shift: T, rhs: &[T]) -> Option<Vec<T>> {
        let n = self.n;
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut sum = self.get(i, j);
                if i == j {
                    sum = sum + shift;
                }
                for k in 0..j {
                    sum = sum - l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(sum > T::zero()) || !sum.is_finite() {
                        return None;
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s = s - l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s = s - l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        Some(x)
    }

    /// Cholesky solve with Levenberg damping raised until the factorization succeeds.
    pub fn damped_solve(&self, rhs: &[T]) -> Option<Vec<T>> {
        if let Some(x) = self.cholesky_solve(T::zero(), rhs) {
            return Some(x);
        }
        let base = (self.trace().abs() / T::from_usize_lossy(self.n.max(1))).max(T::min_positive_value());
        let mut shift = base * T::lit(1e-12);
        for _ in 0..40 {
            if let Some(x) = self.cholesky_solve(shift, rhs) {
                return Some(x);
            }
            shift = shift * T::lit(10.0);
        }
        None
    }
}
