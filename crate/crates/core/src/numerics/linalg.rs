//! Dense small-matrix linear algebra: symmetric matrices, Cholesky, Mahalanobis.

use crate::error::{Error, Result};

/// Relative pivot tolerance: a pivot is rejected if `<= PIVOT_REL_TOL * trace / dim`.
pub const PIVOT_REL_TOL: f64 = 1e-12;

/// Symmetric matrix in full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "SymMatrix needs dim >= 1");
        SymMatrix { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    /// Builds from row-major data, rejecting asymmetry beyond a relative 1e-12
    /// and averaging the two triangles so storage is exactly symmetric.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("matrix dimension must be >= 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        let scale = data.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let mut m = SymMatrix { dim, data };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (m.data[i * dim + j], m.data[j * dim + i]);
                if (a - b).abs() > 1e-12 * scale {
                    return Err(Error::Domain(format!("matrix is not symmetric at ({i}, {j})")));
                }
                let avg = 0.5 * (a + b);
                m.data[i * dim + j] = avg;
                m.data[j * dim + i] = avg;
            }
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(dim, data)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        SymMatrix { dim: self.dim, data: self.data.iter().map(|v| v * c).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Largest eigenvalue by power iteration on the (PSD) matrix.
    pub fn largest_eigenvalue(&self) -> f64 {
        let n = self.dim;
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut lambda = 0.0;
        for _ in 0..500 {
            let w = self.mul_vec(&v);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
            let converged = (norm - lambda).abs() <= 1e-14 * norm;
            lambda = norm;
            v = next;
            if converged {
                break;
            }
        }
        lambda
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Lower-triangular Cholesky factor, stored row-major in a full `dim x dim` buffer.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors a dense symmetric matrix given in row-major order, in place.
    /// Only the lower triangle of `a` is read.
    pub fn factor_in_place(dim: usize, mut a: Vec<f64>) -> Result<Self> {
        if a.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: a.len() });
        }
        let trace: f64 = (0..dim).map(|i| a[i * dim + i]).sum();
        let tol = PIVOT_REL_TOL * trace.abs() / dim as f64;
        for j in 0..dim {
            let (upto, rest) = a.split_at_mut((j + 1) * dim);
            let row_j = &mut upto[j * dim..];
            let sum: f64 = row_j[..j].iter().map(|v| v * v).sum();
            let pivot = row_j[j] - sum;
            if !(pivot > tol) {
                return Err(Error::NotPositiveDefinite { pivot: j, value: pivot });
            }
            let ljj = pivot.sqrt();
            row_j[j] = ljj;
            row_j[j + 1..].iter_mut().for_each(|v| *v = 0.0);
            let lj = &row_j[..j];
            for row_i in rest.chunks_exact_mut(dim) {
                let dot: f64 = row_i[..j].iter().zip(lj).map(|(x, y)| x * y).sum();
                row_i[j] = (row_i[j] - dot) / ljj;
            }
        }
        Ok(Cholesky { dim, l: a })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.l
    }

    /// log of the determinant of the factored matrix.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.get(i, i).ln()).sum::<f64>()
    }

    pub fn det(&self) -> f64 {
        let p: f64 = (0..self.dim).map(|i| self.get(i, i)).product();
        p * p
    }

    /// Solves `L y = b` in place.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(a, c)| a * c).sum();
            b[i] = (b[i] - s) / self.l[i * n + i];
        }
    }

    /// `(x - mu)^T A^{-1} (x - mu)` using the factor of `A`.
    pub fn mahalanobis_sq(&self, x: &[f64], mu: &[f64]) -> f64 {
        let mut buf: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a - b).collect();
        self.mahalanobis_sq_centered(&mut buf)
    }

    /// Same as [`Cholesky::mahalanobis_sq`] on an already-centered vector; overwrites it.
    pub fn mahalanobis_sq_centered(&self, centered: &mut [f64]) -> f64 {
        self.solve_lower_in_place(centered);
        centered.iter().map(|v| v * v).sum()
    }

    /// `L z`, the map used to colour white noise.
    pub fn mul_lower(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|i| self.l[i * n..i * n + i + 1].iter().zip(z).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `L L^T` as a symmetric matrix.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.dim;
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| self.get(i, k) * self.get(j, k)).sum();
                m.set(i, j, s);
            }
        }
        m
    }
}

/// Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky_factor(a: &SymMatrix) -> Result<Cholesky> {
    Cholesky::factor_in_place(a.dim, a.data.clone())
}

/// Squared Mahalanobis distance of `x` from `mu` under `sigma`, via triangular solves.
pub fn mahalanobis_sq(x: &[f64], mu: &[f64], sigma: &SymMatrix) -> Result<f64> {
    let p = sigma.dim();
    if x.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: x.len() });
    }
    if mu.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: mu.len() });
    }
    Ok(cholesky_factor(sigma)?.mahalanobis_sq(x, mu))
}

/// Mean vector and covariance (divisor `n - 1`) of selected rows of a flat
/// row-major `n x p` table. Requires at least two rows.
pub fn mean_and_cov(data: &[f64], p: usize, rows: &[usize]) -> (Vec<f64>, SymMatrix) {
    let k = rows.len();
    let mut mean = vec![0.0; p];
    for &r in rows {
        for (m, v) in mean.iter_mut().zip(&data[r * p..(r + 1) * p]) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= k as f64;
    }
    let mut cov = vec![0.0; p * p];
    let mut centered = vec![0.0; p];
    for &r in rows {
        for ((c, v), m) in centered.iter_mut().zip(&data[r * p..(r + 1) * p]).zip(&mean) {
            *c = v - m;
        }
        for i in 0..p {
            let ci = centered[i];
            let row = &mut cov[i * p..i * p + i + 1];
            for (acc, cj) in row.iter_mut().zip(&centered[..=i]) {
                *acc += ci * cj;
            }
        }
    }
    let denom = (k as f64 - 1.0).max(1.0);
    let mut s = SymMatrix::zeros(p);
    for i in 0..p {
        for j in 0..=i {
            s.set(i, j, cov[i * p + j] / denom);
        }
    }
    (mean, s)
}
