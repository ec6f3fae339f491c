//! Minimal dense linear algebra for SPD covariance handling.
//!
//! Covariances are held through their lower Cholesky factor; determinants
//! and quadratic forms go through the factor so the inverse is never formed.

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check before factorization.
const SYMMETRY_TOL: f64 = 1e-10;

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMat {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "rows must form a square matrix");
            data.extend_from_slice(row);
        }
        Self { dim, data }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn add_to_diagonal(&mut self, v: f64) {
        for i in 0..self.dim {
            let d = self.get(i, i);
            self.set(i, i, d + v);
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Symmetric positive-definite matrix stored as its lower Cholesky factor L,
/// so the represented matrix is L·Lᵀ and every diagonal entry of L is > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix {
    dim: usize,
    // row-major d×d with the strict upper triangle zero
    chol_lower: Vec<f64>,
}

impl SpdMatrix {
    /// Factor a symmetric matrix. The input is symmetrized as (A+Aᵀ)/2 before
    /// factorization to absorb asymmetry accumulated by outer-product sums.
    pub fn cholesky(a: &SquareMat) -> Result<Self> {
        let d = a.dim();
        let scale = a
            .as_slice()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut max_asym = 0.0f64;
        for i in 0..d {
            for j in 0..i {
                max_asym = max_asym.max((a.get(i, j) - a.get(j, i)).abs());
            }
        }
        if scale > 0.0 && max_asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric {
                max_asymmetry: max_asym / scale,
            });
        }

        let mut l = vec![0.0f64; d * d];
        for i in 0..d {
            for j in 0..=i {
                let aij = 0.5 * (a.get(i, j) + a.get(j, i));
                let mut sum = aij;
                for k in 0..j {
                    sum -= l[i * d + k] * l[j * d + k];
                }
                if i == j {
                    // rejects NaN and infinite pivots along with non-positive ones
                    if !sum.is_finite() || sum <= 0.0 {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: sum });
                    }
                    l[i * d + i] = sum.sqrt();
                } else {
                    l[i * d + j] = sum / l[j * d + j];
                }
            }
        }
        Ok(Self {
            dim: d,
            chol_lower: l,
        })
    }

    /// Build directly from an already-valid lower factor. Diagonal entries
    /// must be strictly positive and finite.
    pub fn from_chol_lower(dim: usize, chol_lower: Vec<f64>) -> Result<Self> {
        assert_eq!(chol_lower.len(), dim * dim);
        for i in 0..dim {
            let v = chol_lower[i * dim + i];
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::NotPositiveDefinite { row: i, pivot: v });
            }
        }
        Ok(Self { dim, chol_lower })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            chol_lower: SquareMat::identity(dim).data,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn chol(&self, i: usize, j: usize) -> f64 {
        self.chol_lower[i * self.dim + j]
    }

    /// log|Σ| = 2·Σᵢ log Lᵢᵢ.
    pub fn log_det(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            acc += self.chol(i, i).ln();
        }
        2.0 * acc
    }

    /// vᵀΣ⁻¹v computed as ‖L⁻¹v‖² by forward substitution.
    pub fn mahalanobis_sq(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        let mut acc = 0.0;
        let mut y = vec![0.0f64; self.dim];
        for i in 0..self.dim {
            let row = &self.chol_lower[i * self.dim..i * self.dim + i];
            let s = v[i] - row.iter().zip(&y[..i]).map(|(l, yk)| l * yk).sum::<f64>();
            let yi = s / self.chol(i, i);
            y[i] = yi;
            acc += yi * yi;
        }
        Ok(acc)
    }

    /// Reconstruct the full symmetric matrix L·Lᵀ.
    pub fn to_matrix(&self) -> SquareMat {
        let d = self.dim;
        let mut m = SquareMat::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                let mut s = 0.0;
                for k in 0..=j {
                    s += self.chol(i, k) * self.chol(j, k);
                }
                m.set(i, j, s);
                m.set(j, i, s);
            }
        }
        m
    }

    /// Rescale the represented matrix by `factor` (> 0), staying in factor form.
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0);
        let r = factor.sqrt();
        Self {
            dim: self.dim,
            chol_lower: self.chol_lower.iter().map(|v| v * r).collect(),
        }
    }

    /// L·u for sampling: maps iid standard normals to the covariance shape.
    pub fn chol_mul(&self, u: &[f64]) -> Vec<f64> {
        let d = self.dim;
        (0..d)
            .map(|i| {
                let row = &self.chol_lower[i * d..i * d + i + 1];
                row.iter().zip(u).map(|(l, uk)| l * uk).sum()
            })
            .collect()
    }
}
