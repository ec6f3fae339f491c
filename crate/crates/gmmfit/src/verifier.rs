//! Numerical certification of the surrogate machinery: the explicit lower
//! bound s_l(θ|θ_t) + α_t is built from definitions and checked for
//! minorization, tangency, monotone ascent, and agreement between the two
//! responsibility formulations.

use crate::error::{Error, Result};
use crate::fitter::{update_covariances, update_means, update_weights, FitConfig, FitTrace};
use crate::gaussian::GaussianComponent;
use crate::mixture::{
    floor_and_normalize_weights, log_sum_exp, DataSet, MixtureModel, ResponsibilityMatrix,
};
use crate::sampler::RandomSource;

/// Bound violations below this (scaled by 1+|l|) are floating-point noise,
/// not genuine violations; the bound is exact in real arithmetic.
pub const VIOLATION_TOL: f64 = 1e-8;

/// Tangency tolerance at θ = θ_t, scaled by 1+|l|.
pub const TANGENCY_TOL: f64 = 1e-10;

/// Per-step slack allowed by the monotone-ascent check, scaled by 1+|l|.
pub const ASCENT_SLACK: f64 = 1e-9;

/// Outcome of a minorization sweep around one anchor model.
#[derive(Debug, Clone)]
pub struct SurrogateReport {
    pub theta_t_loglik: f64,
    pub surrogate_at_theta_t: f64,
    pub trial_points: usize,
    /// Trials where surrogate − log-likelihood exceeded the violation tolerance.
    pub violations: usize,
    /// Most positive surrogate − log-likelihood gap seen; −∞ with no trials.
    pub max_violation: f64,
}

impl SurrogateReport {
    /// Zero violations and tangency within tolerance at the anchor.
    pub fn passed(&self) -> bool {
        let tangency_gap = (self.surrogate_at_theta_t - self.theta_t_loglik).abs();
        self.violations == 0
            && tangency_gap <= TANGENCY_TOL * (1.0 + self.theta_t_loglik.abs())
    }
}

/// s_l(θ|θ_t) + α_t = l(θ_t) + Σᵢ Σₖ wᵢₖ·(gᵢₖ(φ) − gᵢₖ(φ_t)) with wᵢₖ the
/// anchor's responsibilities. Zero-weight terms are skipped so a vanishing
/// responsibility never multiplies an infinite log-density.
pub fn surrogate_value(m: &MixtureModel, m_t: &MixtureModel, d: &DataSet) -> Result<f64> {
    if m.k() != m_t.k() || m.dim() != m_t.dim() {
        return Err(Error::DimensionMismatch {
            expected: m_t.k(),
            got: m.k(),
        });
    }
    let k = m_t.k();
    let g_t = m_t.log_weighted_matrix(d)?;
    let g = m.log_weighted_matrix(d)?;
    let mut value = 0.0;
    for (row_t, row) in g_t.chunks_exact(k).zip(g.chunks_exact(k)) {
        let lse_t = log_sum_exp(row_t)?;
        value += lse_t;
        for (gt, gv) in row_t.iter().zip(row) {
            let w = (gt - lse_t).exp();
            if w > 0.0 {
                value += w * (gv - gt);
            }
        }
    }
    Ok(value)
}

/// Sample `trials` random models around the anchor and assert the surrogate
/// never exceeds the log-likelihood. Trial draws are seeded: means move by
/// 0.5 × per-coordinate data spread, covariances rescale log-uniformly in
/// [0.5, 2], weights redraw from a flat simplex.
pub fn check_minorization(
    m_t: &MixtureModel,
    d: &DataSet,
    trials: usize,
    seed: u64,
) -> Result<SurrogateReport> {
    let theta_t_loglik = m_t.log_likelihood(d)?;
    let surrogate_at_theta_t = surrogate_value(m_t, m_t, d)?;
    let std = d.std_dev();
    let mut rng = RandomSource::new(seed);
    let mut violations = 0;
    let mut max_violation = f64::NEG_INFINITY;
    for _ in 0..trials {
        let trial = random_trial_model(m_t, &std, &mut rng)?;
        let ll = trial.log_likelihood(d)?;
        let gap = surrogate_value(&trial, m_t, d)? - ll;
        if gap > max_violation {
            max_violation = gap;
        }
        if gap > VIOLATION_TOL * (1.0 + ll.abs()) {
            violations += 1;
        }
    }
    Ok(SurrogateReport {
        theta_t_loglik,
        surrogate_at_theta_t,
        trial_points: trials,
        violations,
        max_violation,
    })
}

fn random_trial_model(
    base: &MixtureModel,
    std: &[f64],
    rng: &mut RandomSource,
) -> Result<MixtureModel> {
    let k = base.k();
    let mut comps = Vec::with_capacity(k);
    for c in base.components() {
        let mut mean = c.mean().to_vec();
        for (m, s) in mean.iter_mut().zip(std) {
            *m += 0.5 * s * rng.standard_normal();
        }
        let factor = (std::f64::consts::LN_2 * (2.0 * rng.uniform_f64() - 1.0)).exp();
        comps.push(GaussianComponent::new(mean, c.cov().scaled(factor))?);
    }
    let mut weights: Vec<f64> = (0..k).map(|_| -(1.0 - rng.uniform_f64()).ln()).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    } else {
        weights.iter_mut().for_each(|w| *w = 1.0 / k as f64);
    }
    floor_and_normalize_weights(&mut weights);
    MixtureModel::new(weights, comps)
}

/// True iff every consecutive pair satisfies l_t ≥ l_{t−1} − slack, skipping
/// pairs whose step was a rescue (those carry no ascent guarantee).
pub fn check_ascent(trace: &FitTrace) -> bool {
    let ll = trace.logliks();
    let rescued = trace.rescued_flags();
    for t in 1..ll.len() {
        if rescued[t] {
            continue;
        }
        if ll[t] < ll[t - 1] - ASCENT_SLACK * (1.0 + ll[t - 1].abs()) {
            return false;
        }
    }
    true
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Compute responsibilities along both published routes, the density-ratio
/// form and the softmax-of-g form, and confirm they agree entrywise within
/// 1e-12 along with the three parameter updates they induce.
pub fn check_update_equivalence(m_t: &MixtureModel, d: &DataSet) -> Result<bool> {
    let k = m_t.k();
    let n = d.len();
    let lw = m_t.log_weighted_matrix(d)?;
    let mut gamma = vec![0.0; n * k];
    let mut w = vec![0.0; n * k];
    for (i, row) in lw.chunks_exact(k).enumerate() {
        // ratio route: shifted linear-scale densities normalized by their sum
        let shift = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let t: Vec<f64> = row.iter().map(|v| (v - shift).exp()).collect();
        let ts: f64 = t.iter().sum();
        // softmax route: exponentiate against the row's log-sum-exp
        let lse = log_sum_exp(row)?;
        for kk in 0..k {
            gamma[i * k + kk] = t[kk] / ts;
            w[i * k + kk] = (row[kk] - lse).exp();
        }
    }
    let mut ok = gamma
        .iter()
        .zip(&w)
        .all(|(a, b)| (a - b).abs() < 1e-12);

    let rg = ResponsibilityMatrix::from_values(n, k, gamma);
    let rw = ResponsibilityMatrix::from_values(n, k, w);
    let cov_floor = FitConfig::default().cov_floor;

    let pg = update_weights(&rg);
    let pw = update_weights(&rw);
    ok &= pg.iter().zip(&pw).all(|(a, b)| rel_close(*a, *b, 1e-12));

    let mg = update_means(&rg, d)?;
    let mw = update_means(&rw, d)?;
    ok &= mg
        .iter()
        .zip(&mw)
        .all(|(a, b)| a.iter().zip(b).all(|(x, y)| rel_close(*x, *y, 1e-12)));

    let cg = update_covariances(&rg, d, &mg, cov_floor)?;
    let cw = update_covariances(&rw, d, &mw, cov_floor)?;
    ok &= cg.iter().zip(&cw).all(|(a, b)| {
        a.to_matrix()
            .as_slice()
            .iter()
            .zip(b.to_matrix().as_slice())
            .all(|(x, y)| rel_close(*x, *y, 1e-12))
    });
    Ok(ok)
}
