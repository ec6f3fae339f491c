//! Surrogate ascent for mixture likelihoods: responsibilities define the
//! surrogate implicitly, and its separable subproblems have the closed-form
//! weight/mean/covariance updates iterated here.

use crate::error::{Error, Result};
use crate::gaussian::GaussianComponent;
use crate::linalg::{SpdMatrix, SquareMat};
use crate::mixture::{floor_and_normalize_weights, DataSet, MixtureModel, ResponsibilityMatrix};
use crate::sampler::RandomSource;

/// How initial means are chosen; covariances always start at the global data
/// covariance and weights at 1/K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    /// K distinct samples drawn with the seeded generator.
    RandomPoints,
    /// Distance-squared weighted seeding; ties resolve toward lower index.
    KmeansPlusPlus,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Added to every covariance diagonal before factorization.
    pub cov_floor: f64,
    /// Column mass below K·weight_floor·N marks a component as starved.
    pub weight_floor: f64,
    pub seed: u64,
    pub init: InitMethod,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            rel_tol: 1e-8,
            cov_floor: 1e-6,
            weight_floor: 1e-10,
            seed: 0,
            init: InitMethod::KmeansPlusPlus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationReason {
    /// Relative log-likelihood change fell below `rel_tol`.
    Tolerance,
    MaxIter,
}

/// Per-iteration log-likelihoods, starting with the initial model's. Entries
/// are non-decreasing within 1e-9·(1+|l|) except at rescue-flagged steps.
#[derive(Debug, Clone)]
pub struct FitTrace {
    logliks: Vec<f64>,
    rescued: Vec<bool>,
    reason: TerminationReason,
}

impl FitTrace {
    #[cfg(test)]
    pub(crate) fn from_parts(
        logliks: Vec<f64>,
        rescued: Vec<bool>,
        reason: TerminationReason,
    ) -> Self {
        Self {
            logliks,
            rescued,
            reason,
        }
    }

    pub fn logliks(&self) -> &[f64] {
        &self.logliks
    }

    pub fn rescued_flags(&self) -> &[bool] {
        &self.rescued
    }

    /// Number of update steps taken (trace rows minus the initial entry).
    pub fn iterations(&self) -> usize {
        self.logliks.len() - 1
    }

    pub fn converged(&self) -> bool {
        self.reason == TerminationReason::Tolerance
    }

    pub fn reason(&self) -> TerminationReason {
        self.reason
    }

    pub fn final_loglik(&self) -> f64 {
        *self.logliks.last().expect("trace holds the initial entry")
    }
}

/// πₖ = Σᵢ wᵢₖ / N, floored and renormalized onto the simplex.
pub fn update_weights(w: &ResponsibilityMatrix) -> Vec<f64> {
    let n = w.n() as f64;
    let mut pis: Vec<f64> = w.column_masses().iter().map(|m| m / n).collect();
    floor_and_normalize_weights(&mut pis);
    pis
}

/// μₖ = Σᵢ wᵢₖ xᵢ / Σᵢ wᵢₖ, accumulated in fixed row order.
pub fn update_means(w: &ResponsibilityMatrix, d: &DataSet) -> Result<Vec<Vec<f64>>> {
    if w.n() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: w.n(),
            got: d.len(),
        });
    }
    let k = w.k();
    let dim = d.dim();
    let mut means = vec![vec![0.0; dim]; k];
    for (i, x) in d.rows().enumerate() {
        for (kk, mean) in means.iter_mut().enumerate() {
            let wik = w.get(i, kk);
            for (acc, xv) in mean.iter_mut().zip(x) {
                *acc += wik * xv;
            }
        }
    }
    for (kk, (mean, mass)) in means.iter_mut().zip(w.column_masses()).enumerate() {
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::DegenerateComponent { index: kk });
        }
        mean.iter_mut().for_each(|v| *v /= mass);
    }
    Ok(means)
}

/// Σₖ = Σᵢ wᵢₖ (xᵢ−μₖ)(xᵢ−μₖ)ᵀ / Σᵢ wᵢₖ + cov_floor·I, factorized. The means
/// must be the freshly updated ones: the covariance formula consumes μ^{t+1}.
pub fn update_covariances(
    w: &ResponsibilityMatrix,
    d: &DataSet,
    means: &[Vec<f64>],
    cov_floor: f64,
) -> Result<Vec<SpdMatrix>> {
    if w.n() != d.len() {
        return Err(Error::DimensionMismatch {
            expected: w.n(),
            got: d.len(),
        });
    }
    if means.len() != w.k() {
        return Err(Error::DimensionMismatch {
            expected: w.k(),
            got: means.len(),
        });
    }
    let dim = d.dim();
    let masses = w.column_masses();
    let mut covs = Vec::with_capacity(w.k());
    let mut diff = vec![0.0; dim];
    for (kk, mu) in means.iter().enumerate() {
        let mass = masses[kk];
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::DegenerateComponent { index: kk });
        }
        let mut s = SquareMat::zeros(dim);
        for (i, x) in d.rows().enumerate() {
            let wik = w.get(i, kk);
            for (dv, (xv, m)) in diff.iter_mut().zip(x.iter().zip(mu)) {
                *dv = xv - m;
            }
            for (r, dr) in diff.iter().enumerate() {
                let wr = wik * dr;
                for (c, dc) in diff.iter().enumerate() {
                    s.set(r, c, s.get(r, c) + wr * dc);
                }
            }
        }
        let mut s = s.scale(1.0 / mass);
        s.add_to_diagonal(cov_floor);
        let spd =
            SpdMatrix::cholesky(&s).map_err(|_| Error::DegenerateComponent { index: kk })?;
        covs.push(spd);
    }
    Ok(covs)
}

fn apply_updates(
    w: &ResponsibilityMatrix,
    d: &DataSet,
    cov_floor: f64,
) -> Result<MixtureModel> {
    let weights = update_weights(w);
    let means = update_means(w, d)?;
    let covs = update_covariances(w, d, &means, cov_floor)?;
    let comps = means
        .into_iter()
        .zip(covs)
        .map(|(mu, c)| GaussianComponent::new(mu, c))
        .collect::<Result<Vec<_>>>()?;
    MixtureModel::new(weights, comps)
}

/// One full surrogate maximization: responsibilities, then the three closed
///-form updates. Returns the updated model and its log-likelihood.
pub fn mm_step(m: &MixtureModel, d: &DataSet, cfg: &FitConfig) -> Result<(MixtureModel, f64)> {
    let w = m.responsibilities(d)?;
    let model = apply_updates(&w, d, cfg.cov_floor)?;
    let ll = model.log_likelihood(d)?;
    Ok((model, ll))
}

/// Step used by `fit`: if any component's mass fell below the starvation
/// threshold, this iteration only reseeds those components (the ascent
/// guarantee does not apply and the flag records that); otherwise it is a
/// plain update step.
pub(crate) fn step_with_rescue(
    m: &MixtureModel,
    d: &DataSet,
    cfg: &FitConfig,
) -> Result<(MixtureModel, f64, bool)> {
    let w = m.responsibilities(d)?;
    let threshold = m.k() as f64 * cfg.weight_floor * d.len() as f64;
    let starved: Vec<usize> = w
        .column_masses()
        .iter()
        .enumerate()
        .filter(|(_, &mass)| mass < threshold)
        .map(|(kk, _)| kk)
        .collect();
    if !starved.is_empty() {
        let model = rescue_components(m, d, &starved, cfg)?;
        let ll = model.log_likelihood(d)?;
        return Ok((model, ll, true));
    }
    let model = apply_updates(&w, d, cfg.cov_floor)?;
    let ll = model.log_likelihood(d)?;
    Ok((model, ll, false))
}

/// Reseed starved components at the samples the current model explains worst:
/// mean at the lowest-density sample, global covariance, weight 1/K, then the
/// whole weight vector is renormalized.
fn rescue_components(
    m: &MixtureModel,
    d: &DataSet,
    starved: &[usize],
    cfg: &FitConfig,
) -> Result<MixtureModel> {
    let per_sample = m.per_sample_log_likelihood(d)?;
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| per_sample[a].total_cmp(&per_sample[b]).then(a.cmp(&b)));
    let global = global_covariance(d, cfg.cov_floor)?;
    let mut weights = m.weights().to_vec();
    let mut comps = m.components().to_vec();
    for (r, &kk) in starved.iter().enumerate() {
        let idx = order[r % order.len()];
        comps[kk] = GaussianComponent::new(d.sample(idx).to_vec(), global.clone())?;
        weights[kk] = 1.0 / m.k() as f64;
    }
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    floor_and_normalize_weights(&mut weights);
    MixtureModel::new(weights, comps)
}

/// Biased global covariance of the data plus cov_floor on the diagonal.
fn global_covariance(d: &DataSet, cov_floor: f64) -> Result<SpdMatrix> {
    let dim = d.dim();
    let mean = d.mean();
    let mut s = SquareMat::zeros(dim);
    let mut diff = vec![0.0; dim];
    for x in d.rows() {
        for (dv, (xv, m)) in diff.iter_mut().zip(x.iter().zip(&mean)) {
            *dv = xv - m;
        }
        for r in 0..dim {
            for c in 0..dim {
                s.set(r, c, s.get(r, c) + diff[r] * diff[c]);
            }
        }
    }
    let mut s = s.scale(1.0 / d.len() as f64);
    s.add_to_diagonal(cov_floor);
    SpdMatrix::cholesky(&s)
}

/// Uniform weights, global covariance everywhere, means per `cfg.init`; the
/// whole construction is a pure function of (data, k, seed).
pub fn init_model(d: &DataSet, k: usize, cfg: &FitConfig) -> Result<MixtureModel> {
    if k == 0 {
        return Err(Error::EmptyInput);
    }
    if d.len() < k {
        return Err(Error::TooFewSamples {
            needed: k,
            got: d.len(),
        });
    }
    let mut rng = RandomSource::new(cfg.seed);
    let means = match cfg.init {
        InitMethod::RandomPoints => random_points(d, k, &mut rng),
        InitMethod::KmeansPlusPlus => kmeanspp_seeds(d, k, &mut rng),
    };
    let cov = global_covariance(d, cfg.cov_floor)?;
    let comps = means
        .into_iter()
        .map(|mu| GaussianComponent::new(mu, cov.clone()))
        .collect::<Result<Vec<_>>>()?;
    MixtureModel::new(vec![1.0 / k as f64; k], comps)
}

/// K distinct sample indices by partial Fisher-Yates over the index range.
fn random_points(d: &DataSet, k: usize, rng: &mut RandomSource) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = i + ((rng.uniform_f64() * (n - i) as f64) as usize).min(n - i - 1);
        idx.swap(i, j);
    }
    idx[..k].iter().map(|&i| d.sample(i).to_vec()).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Distance-squared weighted seeding. When every remaining point coincides
/// with a chosen center, the lowest unchosen index wins.
fn kmeanspp_seeds(d: &DataSet, k: usize, rng: &mut RandomSource) -> Vec<Vec<f64>> {
    let n = d.len();
    let first = ((rng.uniform_f64() * n as f64) as usize).min(n - 1);
    let mut chosen = vec![first];
    let mut dist_sq: Vec<f64> = d.rows().map(|x| sq_dist(x, d.sample(first))).collect();
    while chosen.len() < k {
        let total: f64 = dist_sq.iter().sum();
        let next = if total > 0.0 {
            let target = rng.uniform_f64() * total;
            // fallback absorbs cumulative-sum rounding shortfall
            let mut pick = dist_sq.iter().rposition(|&v| v > 0.0).unwrap_or(0);
            let mut cum = 0.0;
            for (i, &v) in dist_sq.iter().enumerate() {
                cum += v;
                if target < cum {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap_or(0)
        };
        chosen.push(next);
        for (ds, x) in dist_sq.iter_mut().zip(d.rows()) {
            let nd = sq_dist(x, d.sample(next));
            if nd < *ds {
                *ds = nd;
            }
        }
    }
    chosen.iter().map(|&i| d.sample(i).to_vec()).collect()
}

/// Iterate update steps until the relative log-likelihood change drops below
/// `rel_tol` or `max_iter` is hit. The trace records every iterate's value,
/// the initial model's included.
pub fn fit(d: &DataSet, k: usize, cfg: &FitConfig) -> Result<(MixtureModel, FitTrace)> {
    let mut model = init_model(d, k, cfg)?;
    let mut logliks = vec![model.log_likelihood(d)?];
    let mut rescued = vec![false];
    let mut reason = TerminationReason::MaxIter;
    for _ in 0..cfg.max_iter {
        let prev = *logliks.last().expect("trace is seeded with the initial value");
        let (next, ll, was_rescued) = step_with_rescue(&model, d, cfg)?;
        model = next;
        logliks.push(ll);
        rescued.push(was_rescued);
        // a rescue invalidates the ascent guarantee, so it cannot conclude
        if !was_rescued && (ll - prev).abs() / (1.0 + prev.abs()) < cfg.rel_tol {
            reason = TerminationReason::Tolerance;
            break;
        }
    }
    Ok((
        model,
        FitTrace {
            logliks,
            rescued,
            reason,
        },
    ))
}
