//! Shared fixtures for the integration suites: ground-truth models with
//! well-separated components and seeded datasets drawn from them.

#![allow(dead_code)]

use gmmfit::{
    sample_dataset, DataSet, GaussianComponent, MixtureModel, RandomSource, SpdMatrix, SquareMat,
};

/// Mixture with component means spaced 12 apart along the diagonal,
/// mildly varied banded covariances, and weights proportional to 1 + k.
pub fn ground_truth(k: usize, dim: usize) -> MixtureModel {
    let mut comps = Vec::with_capacity(k);
    for kk in 0..k {
        let offset = 12.0 * kk as f64 - 6.0 * (k as f64 - 1.0);
        let mean = vec![offset; dim];
        let mut cov = SquareMat::zeros(dim);
        for c in 0..dim {
            cov.set(c, c, 0.6 + 0.2 * ((kk + c) % 5) as f64);
        }
        for c in 0..dim.saturating_sub(1) {
            cov.set(c, c + 1, 0.1);
            cov.set(c + 1, c, 0.1);
        }
        comps.push(GaussianComponent::new(mean, SpdMatrix::cholesky(&cov).unwrap()).unwrap());
    }
    let mut weights: Vec<f64> = (0..k).map(|kk| 1.0 + kk as f64).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    MixtureModel::new(weights, comps).unwrap()
}

/// Ground-truth model plus a seeded dataset drawn from it.
pub fn synthetic_instance(n: usize, k: usize, dim: usize, seed: u64) -> (MixtureModel, DataSet) {
    let truth = ground_truth(k, dim);
    let mut rng = RandomSource::new(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1));
    let (data, _) = sample_dataset(&truth, n, &mut rng).unwrap();
    (truth, data)
}

/// Fifty (n, k, dim) combinations cycling N ∈ {50, 200}, K ∈ {1, 2, 4},
/// d ∈ {1, 2, 5}.
pub fn grid_50() -> Vec<(usize, usize, usize)> {
    let mut combos = Vec::new();
    for &n in &[50usize, 200] {
        for &k in &[1usize, 2, 4] {
            for &d in &[1usize, 2, 5] {
                combos.push((n, k, d));
            }
        }
    }
    (0..50).map(|i| combos[i % combos.len()]).collect()
}

/// Copy of the model with one mean coordinate replaced.
pub fn with_mean_coordinate(m: &MixtureModel, kk: usize, c: usize, value: f64) -> MixtureModel {
    let mut comps = m.components().to_vec();
    let mut mean = comps[kk].mean().to_vec();
    mean[c] = value;
    comps[kk] = GaussianComponent::new(mean, comps[kk].cov().clone()).unwrap();
    MixtureModel::new(m.weights().to_vec(), comps).unwrap()
}

pub fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}
