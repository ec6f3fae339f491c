//! Seeded sampling from a mixture: a latent component draw followed by a
//! Gaussian draw, so synthetic datasets carry known ground-truth labels.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::gaussian::GaussianComponent;
use crate::mixture::{DataSet, MixtureModel};

/// Deterministic generator: ChaCha12 keyed by a 64-bit seed. Uniform doubles
/// take the top 53 bits of each word; standard normals come from the
/// Marsaglia polar transform with the second value cached. Identical seed,
/// identical stream.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha12Rng,
    cached_normal: Option<f64>,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha12Rng::seed_from_u64(seed),
            cached_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent generator for (seed, stream index); streams never overlap,
    /// so parallel producers can each take one.
    pub fn substream(&self, index: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        Self {
            seed: self.seed,
            rng,
            cached_normal: None,
        }
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    pub fn uniform_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw; the polar rejection loop stays strictly inside
    /// the unit disk so the log is always finite.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(v) = self.cached_normal.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.uniform_f64() - 1.0;
            let v = 2.0 * self.uniform_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.cached_normal = Some(v * f);
                return u * f;
            }
        }
    }
}

/// Draw a component index by inverse CDF over cumulative weights. Ties and
/// rounding shortfall both resolve toward the lower index; the final index
/// absorbs any leftover mass.
pub fn sample_component(weights: &[f64], rng: &mut RandomSource) -> usize {
    let u = rng.uniform_f64();
    let mut cum = 0.0;
    for (k, w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return k;
        }
    }
    weights.len() - 1
}

/// μ + L·u with u a vector of independent standard normals and L the stored
/// Cholesky factor.
pub fn sample_gaussian(c: &GaussianComponent, rng: &mut RandomSource) -> Vec<f64> {
    let u: Vec<f64> = (0..c.dim()).map(|_| rng.standard_normal()).collect();
    let mut x = c.cov().chol_mul(&u);
    for (xi, m) in x.iter_mut().zip(c.mean()) {
        *xi += m;
    }
    x
}

/// n independent (z, x) draws; labels are returned for ground-truth checks.
pub fn sample_dataset(
    m: &MixtureModel,
    n: usize,
    rng: &mut RandomSource,
) -> Result<(DataSet, Vec<usize>)> {
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let d = m.dim();
    let mut flat = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let k = sample_component(m.weights(), rng);
        flat.extend_from_slice(&sample_gaussian(m.component(k), rng));
        labels.push(k);
    }
    Ok((DataSet::new(n, d, flat)?, labels))
}
