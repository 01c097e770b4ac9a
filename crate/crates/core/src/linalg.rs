//! Dense symmetric matrices and a Cholesky solver sized for a few hundred rows.

use crate::error::{OmtError, Result};

/// Square matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(OmtError::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Lower-triangular Cholesky factor `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    // row-major, only the lower triangle is meaningful
    lower: Vec<f64>,
}

impl Cholesky {
    /// Factors a symmetric positive-definite matrix. Only the lower triangle
    /// of `a` is read.
    ///
    /// A pivot that is not clearly positive relative to the largest diagonal
    /// entry is reported as [`OmtError::Singular`].
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.size();
        let max_diag = (0..n).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
        let tol = max_diag * f64::EPSILON * n.max(1) as f64;
        let mut lower = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let (row_i, row_j) = if i == j {
                    let r = &lower[i * n..i * n + j];
                    (r, r)
                } else {
                    (&lower[i * n..i * n + j], &lower[j * n..j * n + j])
                };
                let dot: f64 = row_i.iter().zip(row_j).map(|(x, y)| x * y).sum();
                let s = a.get(i, j) - dot;
                if i == j {
                    if s.is_nan() || s <= tol {
                        return Err(OmtError::Singular { index: i, pivot: s });
                    }
                    lower[i * n + i] = s.sqrt();
                } else {
                    lower[i * n + j] = s / lower[j * n + j];
                }
            }
        }
        Ok(Cholesky { n, lower })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` by forward then backward substitution.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(OmtError::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let l = &self.lower;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let dot: f64 = l[i * n..i * n + i].iter().zip(&y).map(|(a, b)| a * b).sum();
            y[i] = (b[i] - dot) / l[i * n + i];
        }
        let mut x = y;
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(OmtError::NonFiniteSolution { index });
        }
        Ok(x)
    }
}
