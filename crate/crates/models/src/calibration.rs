//! Small models with known answers, used to calibrate the inference engine:
//! a normal mean, a binomial proportion with exact tails, and a point mass.

use loci_core::{Constraint, Error, Model, ParamPoint, Real, Region, Result, StreamRng};
use rand_distr::{Binomial, ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial as BinomialDist, DiscreteCDF};
use statrs::function::gamma::ln_gamma;

/// `delta log(n) / sqrt(n)`.
pub fn log_root_half_width(n: usize, delta: f64) -> f64 {
    let nf = n as f64;
    delta * nf.ln() / nf.sqrt()
}

/// Sufficient statistics of a normal sample: size, mean and the sum of
/// squared deviations from the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalSample<T> {
    pub n: usize,
    pub mean: T,
    pub ss: T,
}

impl<T: Real> NormalSample<T> {
    pub fn from_values(values: &[T]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("normal sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("normal sample value".into()));
        }
        let n = values.len();
        let mean = values.iter().copied().sum::<T>() / T::from_count(n);
        let ss = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
        Ok(Self { n, mean, ss })
    }
}

/// `X_1..X_n ~ N(mu, sigma^2)` with target `mu` and statistic the sample
/// mean. With `sigma` known the parameter is `(mu)`, otherwise `(mu, sigma)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalMeanModel<T> {
    sigma: Option<T>,
    null_upper: Option<T>,
}

impl<T: Real> NormalMeanModel<T> {
    pub fn known_sigma(sigma: T) -> Result<Self> {
        if !(sigma > T::zero() && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { sigma: Some(sigma), null_upper: None })
    }

    pub fn unknown_sigma() -> Self {
        Self { sigma: None, null_upper: None }
    }

    /// Null hypothesis `mu <= bound`.
    pub fn with_null_upper(mut self, bound: T) -> Self {
        self.null_upper = Some(bound);
        self
    }

    fn sigma_of(&self, phi: &[T]) -> T {
        self.sigma.unwrap_or_else(|| phi[1])
    }
}

impl<T: Real> Model<T> for NormalMeanModel<T> {
    type Data = NormalSample<T>;

    fn dim(&self) -> usize {
        if self.sigma.is_some() {
            1
        } else {
            2
        }
    }

    fn sample_size(&self, data: &NormalSample<T>) -> usize {
        data.n
    }

    /// Draws the mean first, then (with `sigma` unknown and `n >= 2`) the
    /// sum of squares as `sigma^2 chi2_{n-1}`.
    fn simulate(&self, phi: &[T], n: usize, rng: &mut StreamRng) -> NormalSample<T> {
        let sigma = self.sigma_of(phi);
        let z: f64 = StandardNormal.sample(rng);
        let mean = phi[0] + sigma * T::lit(z) / T::from_count(n).sqrt();
        let ss = if self.sigma.is_none() && n >= 2 {
            let c: f64 = ChiSquared::new((n - 1) as f64).expect("positive degrees of freedom").sample(rng);
            sigma * sigma * T::lit(c)
        } else {
            T::zero()
        };
        NormalSample { n, mean, ss }
    }

    fn estimate(&self, data: &NormalSample<T>) -> Result<ParamPoint<T>> {
        match self.sigma {
            Some(_) => ParamPoint::new(vec![data.mean]),
            None => {
                let s = (data.ss / T::from_count(data.n)).sqrt();
                if !(s > T::zero()) {
                    return Err(Error::Numerical("zero sample variance".into()));
                }
                ParamPoint::new(vec![data.mean, s])
            }
        }
    }

    /// `mu` within `delta log(n)/sqrt(n)`; `sigma` (if estimated) within the
    /// same distance on the log scale.
    fn neighborhood(&self, center: &ParamPoint<T>, n: usize, delta: T) -> Result<Region<T>> {
        if !(delta > T::zero()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let h = T::lit(log_root_half_width(n, delta.as_f64()));
        let c = center.coords();
        let mut lower = vec![c[0] - h];
        let mut upper = vec![c[0] + h];
        if self.sigma.is_none() {
            lower.push(c[1] * (-h).exp());
            upper.push(c[1] * h.exp());
        }
        let region = Region::new(lower, upper)?;
        Ok(match self.null_constraint() {
            Some(k) => region.with_constraint(k),
            None => region,
        })
    }

    fn statistic(&self, data: &NormalSample<T>) -> Result<T> {
        Ok(data.mean)
    }

    fn target(&self, phi: &[T]) -> Result<T> {
        Ok(phi[0])
    }

    fn target_estimate(&self, data: &NormalSample<T>) -> Result<T> {
        Ok(data.mean)
    }

    /// Log likelihood up to a constant that does not depend on the parameter.
    fn log_density(&self, data: &NormalSample<T>, phi: &[T]) -> Result<T> {
        let sigma = self.sigma_of(phi);
        if !(sigma > T::zero()) {
            return Ok(T::neg_infinity());
        }
        let n = T::from_count(data.n);
        let d = data.mean - phi[0];
        let quad = (data.ss + n * d * d) / (T::lit(2.0) * sigma * sigma);
        Ok(if self.sigma.is_some() { -quad } else { -n * sigma.ln() - quad })
    }

    fn null_constraint(&self) -> Option<Constraint<T>> {
        self.null_upper.map(|bound| Constraint::AtMost { index: 0, bound })
    }

    fn labels(&self) -> Option<Vec<String>> {
        Some(match self.sigma {
            Some(_) => vec!["mu".into()],
            None => vec!["mu".into(), "sigma".into()],
        })
    }
}

/// Number of successes out of `n` trials.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinomialCount {
    pub n: u64,
    pub x: u64,
}

/// `P(X >= t)` for `X ~ Binomial(n, p)`.
pub fn binomial_tail(n: u64, p: f64, t: u64) -> f64 {
    if t == 0 {
        return 1.0;
    }
    if t > n {
        return 0.0;
    }
    let d = BinomialDist::new(p.clamp(0.0, 1.0), n).expect("probability in [0,1]");
    d.sf(t - 1)
}

/// `X ~ Binomial(n, pi)` with statistic `X`, target `pi` and optional null
/// `pi <= bound`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BinomialModel {
    null_upper: Option<f64>,
}

impl BinomialModel {
    pub fn new() -> Self {
        Self { null_upper: None }
    }

    pub fn with_null_upper(bound: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&bound) {
            return Err(Error::InvalidArgument(format!("null bound {bound} outside [0, 1]")));
        }
        Ok(Self { null_upper: Some(bound) })
    }

    /// Interval `N(pi_hat) ∩ null`, or `None` when it is empty.
    pub fn null_neighborhood(&self, data: &BinomialCount, delta: f64) -> Result<Option<(f64, f64)>> {
        let r = self.neighborhood(&self.estimate(data)?, data.n as usize, delta)?;
        let lo = r.lower()[0];
        let hi = self.null_upper.map_or(r.upper()[0], |b| r.upper()[0].min(b));
        Ok((lo <= hi).then_some((lo, hi)))
    }

    /// LOT p-value with exact tails: the largest `P_phi(X >= x)` over
    /// `levels` equally spaced points of `N(pi_hat) ∩ null`; 0 if that set is empty.
    pub fn exact_lot_pvalue(&self, data: &BinomialCount, delta: f64, levels: usize) -> Result<f64> {
        if levels == 0 {
            return Err(Error::InvalidArgument("need at least one design level".into()));
        }
        let Some((lo, hi)) = self.null_neighborhood(data, delta)? else {
            return Ok(0.0);
        };
        let points =
            (0..levels).map(|k| if levels == 1 { hi } else { lo + (hi - lo) * k as f64 / (levels - 1) as f64 });
        Ok(points.map(|phi| binomial_tail(data.n, phi, data.x)).fold(0.0, f64::max))
    }
}

impl Default for BinomialModel {
    fn default() -> Self {
        Self::new()
    }
}

impl Model<f64> for BinomialModel {
    type Data = BinomialCount;

    fn dim(&self) -> usize {
        1
    }

    fn sample_size(&self, data: &BinomialCount) -> usize {
        data.n as usize
    }

    fn simulate(&self, phi: &[f64], n: usize, rng: &mut StreamRng) -> BinomialCount {
        let x = Binomial::new(n as u64, phi[0].clamp(0.0, 1.0)).expect("probability in [0,1]").sample(rng);
        BinomialCount { n: n as u64, x }
    }

    fn estimate(&self, data: &BinomialCount) -> Result<ParamPoint<f64>> {
        if data.n == 0 || data.x > data.n {
            return Err(Error::InvalidArgument(format!("invalid binomial count {}/{}", data.x, data.n)));
        }
        ParamPoint::new(vec![data.x as f64 / data.n as f64])
    }

    /// `[pi_hat - h, pi_hat + h] ∩ [0, 1]` with `h = delta log(n)/sqrt(n)`.
    fn neighborhood(&self, center: &ParamPoint<f64>, n: usize, delta: f64) -> Result<Region<f64>> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let h = log_root_half_width(n, delta);
        let region = Region::new(vec![(center[0] - h).max(0.0)], vec![(center[0] + h).min(1.0)])?;
        Ok(match self.null_constraint() {
            Some(k) => region.with_constraint(k),
            None => region,
        })
    }

    fn statistic(&self, data: &BinomialCount) -> Result<f64> {
        Ok(data.x as f64)
    }

    fn target(&self, phi: &[f64]) -> Result<f64> {
        Ok(phi[0])
    }

    fn target_estimate(&self, data: &BinomialCount) -> Result<f64> {
        Ok(data.x as f64 / data.n as f64)
    }

    fn log_density(&self, data: &BinomialCount, phi: &[f64]) -> Result<f64> {
        let (n, x, p) = (data.n as f64, data.x as f64, phi[0]);
        let log_choose = ln_gamma(n + 1.0) - ln_gamma(x + 1.0) - ln_gamma(n - x + 1.0);
        let term = |k: f64, q: f64| if k == 0.0 { 0.0 } else { k * q.ln() };
        Ok(log_choose + term(x, p) + term(n - x, 1.0 - p))
    }

    fn null_constraint(&self) -> Option<Constraint<f64>> {
        self.null_upper.map(|bound| Constraint::AtMost { index: 0, bound })
    }

    fn labels(&self) -> Option<Vec<String>> {
        Some(vec!["pi".into()])
    }
}

/// Point-mass data equal to the parameter; the statistic is constant, so
/// every p-value is 1 and every interval has zero width.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DegenerateModel;

impl Model<f64> for DegenerateModel {
    type Data = f64;

    fn dim(&self) -> usize {
        1
    }

    fn sample_size(&self, _data: &f64) -> usize {
        1
    }

    fn simulate(&self, phi: &[f64], _n: usize, _rng: &mut StreamRng) -> f64 {
        phi[0]
    }

    fn estimate(&self, data: &f64) -> Result<ParamPoint<f64>> {
        ParamPoint::new(vec![*data])
    }

    fn neighborhood(&self, center: &ParamPoint<f64>, _n: usize, delta: f64) -> Result<Region<f64>> {
        Region::cube(center.coords(), delta)
    }

    fn statistic(&self, _data: &f64) -> Result<f64> {
        Ok(0.0)
    }

    fn target(&self, phi: &[f64]) -> Result<f64> {
        Ok(phi[0])
    }

    fn target_estimate(&self, data: &f64) -> Result<f64> {
        Ok(*data)
    }

    fn log_density(&self, _data: &f64, _phi: &[f64]) -> Result<f64> {
        Ok(0.0)
    }
}
