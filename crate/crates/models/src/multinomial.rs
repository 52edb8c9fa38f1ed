//! Interval estimation for the largest cell probability of a multinomial.

use loci_core::{Constraint, Error, Model, ParamPoint, Region, Result, StreamRng};
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub counts: Vec<u64>,
}

impl CellCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Validates a probability vector: positive entries summing to one.
pub fn check_probabilities(pi: &[f64]) -> Result<()> {
    if pi.is_empty() {
        return Err(Error::Empty("cell probabilities"));
    }
    if pi.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::InvalidArgument("cell probabilities must be positive".into()));
    }
    let s: f64 = pi.iter().sum();
    if (s - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!("cell probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// Draws cell counts by sequential binomial conditioning.
pub fn sample_counts(pi: &[f64], n: u64, rng: &mut StreamRng) -> CellCounts {
    let mut counts = vec![0u64; pi.len()];
    let mut left = n;
    let mut mass = 1.0;
    for (i, &p) in pi.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == pi.len() {
            counts[i] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let c = Binomial::new(left, q).expect("probability in [0,1]").sample(rng);
        counts[i] = c;
        left -= c;
        mass -= p;
    }
    CellCounts { counts }
}

/// `(X_i + 1/2) / (n + k/2)`.
pub fn jeffreys_estimate(counts: &CellCounts) -> Result<ParamPoint<f64>> {
    let k = counts.counts.len();
    if k == 0 {
        return Err(Error::Empty("cell counts"));
    }
    let denom = counts.total() as f64 + k as f64 / 2.0;
    ParamPoint::new(counts.counts.iter().map(|&x| (x as f64 + 0.5) / denom).collect())
}

pub fn pi_max(pi: &[f64]) -> f64 {
    pi.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Half-width `delta log(n) / sqrt(n)` of the neighborhood box.
pub fn half_width(n: usize, delta: f64) -> f64 {
    let nf = n as f64;
    delta * nf.ln() / nf.sqrt()
}

/// Model for `MN_k(n; pi)` with target `max_i pi_i`.
#[derive(Clone, Debug)]
pub struct MultinomialModel {
    k: usize,
}

impl MultinomialModel {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("need at least two cells, got {k}")));
        }
        Ok(Self { k })
    }

    pub fn cells(&self) -> usize {
        self.k
    }
}

impl Model<f64> for MultinomialModel {
    type Data = CellCounts;

    fn dim(&self) -> usize {
        self.k
    }

    fn sample_size(&self, data: &CellCounts) -> usize {
        data.total() as usize
    }

    fn simulate(&self, phi: &[f64], n: usize, rng: &mut StreamRng) -> CellCounts {
        sample_counts(phi, n as u64, rng)
    }

    fn estimate(&self, data: &CellCounts) -> Result<ParamPoint<f64>> {
        if data.counts.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: data.counts.len() });
        }
        jeffreys_estimate(data)?.with_labels(self.labels().expect("labels"))
    }

    /// Box of half-width `delta log(n)/sqrt(n)` clipped to `[0,1]`, on the simplex.
    fn neighborhood(&self, center: &ParamPoint<f64>, n: usize, delta: f64) -> Result<Region<f64>> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let h = half_width(n, delta);
        let lower = center.coords().iter().map(|&p| (p - h).max(0.0)).collect();
        let upper = center.coords().iter().map(|&p| (p + h).min(1.0)).collect();
        Ok(Region::new(lower, upper)?.with_constraint(Constraint::SimplexSumToOne))
    }

    fn target(&self, phi: &[f64]) -> Result<f64> {
        Ok(pi_max(phi))
    }

    fn target_estimate(&self, data: &CellCounts) -> Result<f64> {
        Ok(pi_max(jeffreys_estimate(data)?.coords()))
    }

    fn log_density(&self, data: &CellCounts, phi: &[f64]) -> Result<f64> {
        let n = data.total() as f64;
        let mut v = ln_gamma(n + 1.0);
        for (&x, &p) in data.counts.iter().zip(phi) {
            if x == 0 {
                continue;
            }
            if p <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            v += x as f64 * p.ln() - ln_gamma(x as f64 + 1.0);
        }
        Ok(v)
    }

    fn labels(&self) -> Option<Vec<String>> {
        Some((1..=self.k).map(|i| format!("pi{i}")).collect())
    }
}
