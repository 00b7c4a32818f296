//! Small dense symmetric matrices and a cyclic Jacobi eigensolver.

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// `(A + A^T) / 2`.
    pub fn symmetrized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for j in 0..i {
                let v = 0.5 * (self[(i, j)] + self[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(1.0);
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    acc += self[(i, j)] * self[(i, j)];
                }
            }
        }
        acc.sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vec<f64>> {
    Ok(jacobi(m, false)?.0)
}

/// Eigenvalues (ascending) and the matching orthonormal eigenvectors, stored
/// as the columns of the returned matrix.
pub fn symmetric_eigen(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let (values, vectors) = jacobi(m, true)?;
    Ok((values, vectors.expect("requested")))
}

fn jacobi(m: &Matrix, want_vectors: bool) -> Result<(Vec<f64>, Option<Matrix>)> {
    if !m.data.iter().all(|v| v.is_finite()) {
        return Err(Error::Precondition("matrix has non-finite entries".into()));
    }
    if !m.is_symmetric(1e-12) {
        return Err(Error::Precondition("matrix is not symmetric".into()));
    }
    let n = m.n;
    let mut a = m.symmetrized();
    let mut v = want_vectors.then(|| Matrix::identity(n));
    let scale = a.max_abs();
    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            if a.off_diagonal_norm() <= JACOBI_TOL * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= f64::MIN_POSITIVE {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = if theta == 0.0 {
                        1.0
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    rotate_columns(&mut a, p, q, c, s);
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    if let Some(v) = v.as_mut() {
                        rotate_columns(v, p, q, c, s);
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = v.map(|v| {
        let mut sorted = Matrix::zeros(n);
        for (col, &src) in order.iter().enumerate() {
            for row in 0..n {
                sorted[(row, col)] = v[(row, src)];
            }
        }
        sorted
    });
    Ok((values, vectors))
}

fn rotate_columns(a: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..a.n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(m)?.iter().fold(0.0, |acc, v| acc.max(v.abs())))
}
