//! The mixture model: stable log-likelihood evaluation and the responsibility
//! matrix shared by the surrogate-ascent and EM formulations.

use crate::error::{Error, Result};
use crate::gaussian::GaussianComponent;

/// Weights are clamped to this floor and renormalized after every update, so
/// the log of a weight is always finite.
pub const WEIGHT_FLOOR: f64 = 1e-10;

/// Tolerance on the weight simplex sum.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// N×d matrix of observed samples, one row per sample.
#[derive(Debug, Clone)]
pub struct DataSet {
    n: usize,
    dim: usize,
    samples: Vec<f64>,
}

impl DataSet {
    pub fn new(n: usize, dim: usize, samples: Vec<f64>) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::EmptyInput);
        }
        if samples.len() != n * dim {
            return Err(Error::DimensionMismatch {
                expected: n * dim,
                got: samples.len(),
            });
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidModel("data set has non-finite entries".into()));
        }
        Ok(Self { n, dim, samples })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let dim = rows[0].len();
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, flat)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.dim)
    }

    /// Per-coordinate mean of the samples.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for row in self.rows() {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        m.iter_mut().for_each(|v| *v *= inv);
        m
    }

    /// Per-coordinate standard deviation (biased, divisor N).
    pub fn std_dev(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut acc = vec![0.0; self.dim];
        for row in self.rows() {
            for ((a, v), m) in acc.iter_mut().zip(row).zip(&mean) {
                let d = v - m;
                *a += d * d;
            }
        }
        acc.iter_mut().for_each(|v| *v = (*v / self.n as f64).sqrt());
        acc
    }
}

/// N×K responsibilities; every row lies on the probability simplex.
#[derive(Debug, Clone)]
pub struct ResponsibilityMatrix {
    n: usize,
    k: usize,
    values: Vec<f64>,
}

impl ResponsibilityMatrix {
    pub(crate) fn from_values(n: usize, k: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n * k);
        Self { n, k, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.k + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    /// Σᵢ wᵢₖ for each component.
    pub fn column_masses(&self) -> Vec<f64> {
        let mut masses = vec![0.0; self.k];
        for row in self.values.chunks_exact(self.k) {
            for (m, v) in masses.iter_mut().zip(row) {
                *m += v;
            }
        }
        masses
    }
}

/// Mixture weights plus components (all sharing one dimension).
#[derive(Debug, Clone)]
pub struct MixtureModel {
    weights: Vec<f64>,
    components: Vec<GaussianComponent>,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, components: Vec<GaussianComponent>) -> Result<Self> {
        if weights.is_empty() || components.is_empty() {
            return Err(Error::EmptyInput);
        }
        if weights.len() != components.len() {
            return Err(Error::DimensionMismatch {
                expected: components.len(),
                got: weights.len(),
            });
        }
        let sum: f64 = weights.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidModel(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        if let Some(w) = weights.iter().find(|w| w.is_nan() || **w < WEIGHT_FLOOR) {
            return Err(Error::InvalidModel(format!(
                "weight {w} is below the floor {WEIGHT_FLOOR}"
            )));
        }
        let dim = components[0].dim();
        if components.iter().any(|c| c.dim() != dim) {
            return Err(Error::InvalidModel(
                "components do not share a common dimension".into(),
            ));
        }
        Ok(Self {
            weights,
            components,
        })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[GaussianComponent] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &GaussianComponent {
        &self.components[k]
    }

    /// log(πₖ·N(xᵢ; μₖ, Σₖ)) for every sample and component, row-major N×K.
    pub fn log_weighted_matrix(&self, data: &DataSet) -> Result<Vec<f64>> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: data.dim(),
            });
        }
        let k = self.k();
        let mut out = vec![0.0; data.len() * k];
        for (i, x) in data.rows().enumerate() {
            for (j, (c, w)) in self.components.iter().zip(&self.weights).enumerate() {
                out[i * k + j] = c.log_weighted_density(*w, x)?;
            }
        }
        Ok(out)
    }

    /// Total log-likelihood: Σᵢ log Σₖ πₖ·N(xᵢ; μₖ, Σₖ), summed sequentially
    /// over samples so results are reproducible on a given build.
    pub fn log_likelihood(&self, data: &DataSet) -> Result<f64> {
        Ok(self.per_sample_log_likelihood(data)?.iter().sum())
    }

    /// log Σₖ πₖ·N(xᵢ; μₖ, Σₖ) for each sample.
    pub fn per_sample_log_likelihood(&self, data: &DataSet) -> Result<Vec<f64>> {
        let lw = self.log_weighted_matrix(data)?;
        let k = self.k();
        Ok(lw.chunks_exact(k).map(|row| log_sum_exp(row).expect("k >= 1")).collect())
    }

    /// Posterior component probabilities per sample, computed in log space
    /// with the row max subtracted and normalized in linear scale.
    pub fn responsibilities(&self, data: &DataSet) -> Result<ResponsibilityMatrix> {
        let k = self.k();
        let mut values = self.log_weighted_matrix(data)?;
        for row in values.chunks_exact_mut(k) {
            let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - m).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        Ok(ResponsibilityMatrix::from_values(data.len(), k, values))
    }
}

/// max(y) + log Σ exp(yₖ − max(y)); tolerates −∞ entries.
pub fn log_sum_exp(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    let m = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = y.iter().map(|v| (v - m).exp()).sum();
    Ok(m + sum.ln())
}

/// Clamp weights to the floor and renormalize onto the simplex. A final clamp
/// absorbs the sub-floor dip renormalization can introduce; the sum stays
/// within `WEIGHT_SUM_TOL` of one.
pub fn floor_and_normalize_weights(weights: &mut [f64]) {
    for w in weights.iter_mut() {
        *w = w.max(WEIGHT_FLOOR);
    }
    let sum: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= sum;
    }
    for w in weights.iter_mut() {
        *w = w.max(WEIGHT_FLOOR);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::LOG_TWO_PI;
    use crate::linalg::{SpdMatrix, SquareMat};

    fn standard_component(d: usize, mean: &[f64]) -> GaussianComponent {
        GaussianComponent::new(mean.to_vec(), SpdMatrix::identity(d)).unwrap()
    }

    fn single_standard_model(d: usize) -> MixtureModel {
        MixtureModel::new(vec![1.0], vec![standard_component(d, &vec![0.0; d])]).unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)] // 0.693147 is the pinned reference value
    fn log_sum_exp_two_equal_terms() {
        let got = log_sum_exp(&[0.0, 0.0]).unwrap();
        assert!((got - 2.0f64.ln()).abs() < 1e-15);
        assert!((got - 0.693147).abs() < 1e-6);
    }

    #[test]
    fn log_sum_exp_single_entry_is_identity() {
        for a in [-3.25, 0.0, 7.5, -1000.0] {
            assert_eq!(log_sum_exp(&[a]).unwrap(), a);
        }
    }

    #[test]
    fn log_sum_exp_no_overflow() {
        let got = log_sum_exp(&[1000.0, 1000.0]).unwrap();
        assert_eq!(got, 1000.0 + 2.0f64.ln());
    }

    #[test]
    fn log_sum_exp_handles_neg_infinity() {
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn log_sum_exp_rejects_empty() {
        assert!(matches!(log_sum_exp(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn log_likelihood_single_standard_at_mean() {
        let m = single_standard_model(1);
        let d = DataSet::from_rows(&[vec![0.0]]).unwrap();
        let got = m.log_likelihood(&d).unwrap();
        assert!((got + 0.5 * LOG_TWO_PI).abs() < 1e-15);
        assert!((got + 0.918939).abs() < 1e-6);
    }

    #[test]
    fn identical_components_collapse_to_single() {
        let d = DataSet::from_rows(&[vec![0.4, -1.0], vec![2.0, 0.0], vec![-0.3, 0.7]]).unwrap();
        let c = standard_component(2, &[0.5, -0.5]);
        let single = MixtureModel::new(vec![1.0], vec![c.clone()]).unwrap();
        let double = MixtureModel::new(vec![0.25, 0.75], vec![c.clone(), c]).unwrap();
        let a = single.log_likelihood(&d).unwrap();
        let b = double.log_likelihood(&d).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    // Independent route: linear-scale densities summed naively, then log.
    #[test]
    fn log_likelihood_matches_naive_oracle() {
        let cov_a = SquareMat::from_rows(&[vec![1.5, 0.25], vec![0.25, 0.75]]);
        let cov_b = SquareMat::from_rows(&[vec![0.5, -0.1], vec![-0.1, 2.0]]);
        let m = MixtureModel::new(
            vec![0.2, 0.5, 0.3],
            vec![
                GaussianComponent::new(vec![0.0, 0.0], SpdMatrix::cholesky(&cov_a).unwrap())
                    .unwrap(),
                GaussianComponent::new(vec![2.0, -1.0], SpdMatrix::cholesky(&cov_b).unwrap())
                    .unwrap(),
                standard_component(2, &[-1.0, 1.5]),
            ],
        )
        .unwrap();
        let d = DataSet::from_rows(&[
            vec![0.1, 0.2],
            vec![1.9, -0.8],
            vec![-1.1, 1.4],
            vec![0.5, 0.5],
            vec![-0.4, -0.2],
        ])
        .unwrap();

        let mut naive = 0.0;
        for row in d.rows() {
            let mut p = 0.0;
            for (c, w) in m.components().iter().zip(m.weights()) {
                p += w * c.log_density(row).unwrap().exp();
            }
            naive += p.ln();
        }
        let stable = m.log_likelihood(&d).unwrap();
        assert!((stable - naive).abs() < 1e-9, "{stable} vs {naive}");
    }

    #[test]
    fn responsibilities_symmetric_components() {
        let c = standard_component(1, &[0.0]);
        let m = MixtureModel::new(vec![0.5, 0.5], vec![c.clone(), c]).unwrap();
        let d = DataSet::from_rows(&[vec![0.3], vec![-2.0]]).unwrap();
        let r = m.responsibilities(&d).unwrap();
        for i in 0..2 {
            assert!((r.get(i, 0) - 0.5).abs() < 1e-15);
            assert!((r.get(i, 1) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn responsibilities_single_component_all_one() {
        let m = single_standard_model(2);
        let d = DataSet::from_rows(&[vec![0.0, 0.0], vec![5.0, -3.0]]).unwrap();
        let r = m.responsibilities(&d).unwrap();
        for i in 0..2 {
            assert_eq!(r.get(i, 0), 1.0);
        }
    }

    #[test]
    fn responsibilities_identical_components_reproduce_weights() {
        let c = standard_component(1, &[0.4]);
        let m = MixtureModel::new(vec![0.3, 0.7], vec![c.clone(), c]).unwrap();
        let d = DataSet::from_rows(&[vec![1.0], vec![-1.0], vec![0.0]]).unwrap();
        let r = m.responsibilities(&d).unwrap();
        for i in 0..3 {
            assert!((r.get(i, 0) - 0.3).abs() < 1e-12);
            assert!((r.get(i, 1) - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn responsibilities_rows_on_simplex_far_sample() {
        // one sample far from both components exercises the max shift
        let m = MixtureModel::new(
            vec![0.5, 0.5],
            vec![standard_component(1, &[0.0]), standard_component(1, &[1.0])],
        )
        .unwrap();
        let d = DataSet::from_rows(&[vec![500.0], vec![0.2], vec![-300.0]]).unwrap();
        let r = m.responsibilities(&d).unwrap();
        for i in 0..3 {
            let sum: f64 = r.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(r.row(i).iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn model_rejects_bad_weight_sum() {
        let c = standard_component(1, &[0.0]);
        assert!(MixtureModel::new(vec![0.5, 0.4], vec![c.clone(), c]).is_err());
    }

    #[test]
    fn model_rejects_subfloor_weight() {
        let c = standard_component(1, &[0.0]);
        let res = MixtureModel::new(vec![1e-12, 1.0 - 1e-12], vec![c.clone(), c]);
        assert!(res.is_err());
    }

    #[test]
    fn model_rejects_mixed_dimensions() {
        let res = MixtureModel::new(
            vec![0.5, 0.5],
            vec![standard_component(1, &[0.0]), standard_component(2, &[0.0, 0.0])],
        );
        assert!(res.is_err());
    }

    #[test]
    fn floor_and_normalize_respects_floor_and_sum() {
        let mut w = vec![0.0, 0.5, 0.5];
        floor_and_normalize_weights(&mut w);
        assert!(w.iter().all(|v| *v >= WEIGHT_FLOOR));
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= WEIGHT_SUM_TOL);
    }

    #[test]
    fn label_permutation_invariance_of_log_likelihood() {
        let d = DataSet::from_rows(&[vec![0.1, 0.2], vec![1.0, -1.0], vec![-0.5, 0.8]]).unwrap();
        let comps = vec![
            standard_component(2, &[0.0, 0.0]),
            standard_component(2, &[2.0, 2.0]),
            standard_component(2, &[-2.0, 1.0]),
        ];
        let weights = vec![0.2, 0.3, 0.5];
        let m = MixtureModel::new(weights.clone(), comps.clone()).unwrap();
        let perm = [2usize, 0, 1];
        let m_perm = MixtureModel::new(
            perm.iter().map(|&p| weights[p]).collect(),
            perm.iter().map(|&p| comps[p].clone()).collect(),
        )
        .unwrap();
        let a = m.log_likelihood(&d).unwrap();
        let b = m_perm.log_likelihood(&d).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
