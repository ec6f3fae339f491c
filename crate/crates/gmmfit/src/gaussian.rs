//! Multivariate normal log-density and the weighted log-density that the
//! mixture machinery is phrased in. Everything stays in log space; the
//! linear-scale density is never materialized.

use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;

pub const LOG_TWO_PI: f64 = 1.8378770664093453;

/// One mixture component: mean vector plus SPD covariance.
#[derive(Debug, Clone)]
pub struct GaussianComponent {
    mean: Vec<f64>,
    cov: SpdMatrix,
}

impl GaussianComponent {
    pub fn new(mean: Vec<f64>, cov: SpdMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                got: mean.len(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("component mean has non-finite entries".into()));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &SpdMatrix {
        &self.cov
    }

    /// log N(x; μ, Σ) = −(d/2)·log 2π − ½·log|Σ| − ½·(x−μ)ᵀΣ⁻¹(x−μ)
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        let diff: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let maha = self.cov.mahalanobis_sq(&diff)?;
        Ok(-0.5 * (d as f64) * LOG_TWO_PI - 0.5 * self.cov.log_det() - 0.5 * maha)
    }

    /// log(π·N(x; μ, Σ)) for a strictly positive weight π.
    pub fn log_weighted_density(&self, weight: f64, x: &[f64]) -> Result<f64> {
        if weight.is_nan() || weight <= 0.0 {
            return Err(Error::NonPositiveWeight(weight));
        }
        Ok(weight.ln() + self.log_density(x)?)
    }
}
