//! Small dense linear algebra for the Newton step.

use thiserror::Error;

use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("matrix is singular at pivot column {column}")]
pub struct SingularMatrix {
    pub column: usize,
}

/// Backend for the Newton linear solve `A x = b`.
///
/// The solver consumes `A` so factorizations can reuse its storage.
pub trait LinearSolver<T: Scalar> {
    fn solve(&self, a: DenseMatrix<T>, b: &[T]) -> Result<Vec<T>, SingularMatrix>;
}

/// LU factorization with partial pivoting.
#[derive(Debug, Default, Clone, Copy)]
pub struct DenseLu;

impl<T: Scalar> LinearSolver<T> for DenseLu {
    fn solve(&self, mut a: DenseMatrix<T>, b: &[T]) -> Result<Vec<T>, SingularMatrix> {
        let n = a.rows;
        assert_eq!(a.cols, n, "LU needs a square matrix");
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();

        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|r| (r, a.get(r, k).abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == T::zero() || !pivot.is_finite() {
                return Err(SingularMatrix { column: k });
            }
            if p != k {
                for c in 0..n {
                    a.data.swap(k * n + c, p * n + c);
                }
                x.swap(k, p);
            }
            let akk = a.get(k, k);
            for r in k + 1..n {
                let f = a.get(r, k) / akk;
                if f == T::zero() {
                    continue;
                }
                a.set(r, k, f);
                for c in k + 1..n {
                    let v = a.get(r, c) - f * a.get(k, c);
                    a.set(r, c, v);
                }
                x[r] = x[r] - f * x[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for c in k + 1..n {
                s -= a.get(k, c) * x[c];
            }
            x[k] = s / a.get(k, k);
        }
        if x.iter().all(|v| v.is_finite()) {
            Ok(x)
        } else {
            Err(SingularMatrix { column: n })
        }
    }
}
