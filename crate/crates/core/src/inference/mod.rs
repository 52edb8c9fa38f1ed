//! Local optimization tests (LOT) and local optimization confidence
//! intervals (LOCI), with the ordinary bootstrap and m-out-of-n baselines.
//!
//! Every procedure draws resample `m` at try point `l` from
//! `Streams::rng(l, m)`, so results do not depend on thread scheduling and
//! appending try points leaves earlier points' resamples unchanged.

mod importance;
mod interval;
mod pvalue;

use serde::Serialize;

pub use importance::{is_ci_upper, is_objective, is_pvalue_design, is_pvalue_refined, ImportanceSet, RefineOptions};
pub use interval::{bootstrap_ci, default_m, m_out_of_n_ci, nb_ci};
pub use pvalue::{bootstrap_pvalue, nb_pvalue};

use crate::design::{Constraint, ParamPoint, Region};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::streams::StreamRng;

/// Effective sample size below which importance weights are reported as degenerate.
pub const ESS_WARNING_THRESHOLD: f64 = 50.0;

/// A parametric model the inference procedures can resample from.
///
/// Optional pieces default to [`Error::Unsupported`]; a procedure that needs
/// one fails with that error.
pub trait Model<T: Real>: Sync {
    type Data: Send + Sync;

    /// Dimension of the parameter vector.
    fn dim(&self) -> usize;

    fn sample_size(&self, data: &Self::Data) -> usize;

    /// Draws a dataset of size `n` at `phi`; deterministic in the rng state.
    fn simulate(&self, phi: &[T], n: usize, rng: &mut StreamRng) -> Self::Data;

    fn estimate(&self, data: &Self::Data) -> Result<ParamPoint<T>>;

    /// Neighborhood `N(center)` for sample size `n` and tuning constant `delta`.
    fn neighborhood(&self, center: &ParamPoint<T>, n: usize, delta: T) -> Result<Region<T>>;

    /// Test statistic, large values pointing away from the null.
    fn statistic(&self, _data: &Self::Data) -> Result<T> {
        Err(Error::Unsupported("statistic"))
    }

    /// Functional of interest.
    fn target(&self, _phi: &[T]) -> Result<T> {
        Err(Error::Unsupported("target"))
    }

    fn target_estimate(&self, _data: &Self::Data) -> Result<T> {
        Err(Error::Unsupported("target estimate"))
    }

    fn log_density(&self, _data: &Self::Data, _phi: &[T]) -> Result<T> {
        Err(Error::Unsupported("log density"))
    }

    /// Membership predicate of the null parameter set, if restricted.
    fn null_constraint(&self) -> Option<Constraint<T>> {
        None
    }

    fn labels(&self) -> Option<Vec<String>> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueMethod {
    Bootstrap,
    NeighborhoodBootstrap,
    ImportanceDesign,
    ImportanceRefined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMethod {
    BootstrapHybrid,
    NeighborhoodBootstrap,
    MOutOfN,
    ImportanceWeighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Upper,
    Lower,
    TwoSided,
}

impl Side {
    /// Quantile levels `(lower, upper)` used for a `1 - alpha` interval.
    pub fn levels(self, alpha: f64) -> (Option<f64>, Option<f64>) {
        match self {
            Side::Upper => (None, Some(1.0 - alpha)),
            Side::Lower => (Some(alpha), None),
            Side::TwoSided => (Some(alpha / 2.0), Some(1.0 - alpha / 2.0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointValue<T> {
    pub point: ParamPoint<T>,
    pub value: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PValueResult<T> {
    pub p: T,
    pub statistic: T,
    pub per_point: Vec<PointValue<T>>,
    pub method: PValueMethod,
    pub resamples: usize,
    pub warnings: Vec<String>,
}

/// Per-try-point quantiles of the pivot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointQuantiles<T> {
    pub point: ParamPoint<T>,
    pub lower: Option<T>,
    pub upper: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CiResult<T> {
    pub lower: T,
    pub upper: T,
    pub estimate: T,
    pub level: f64,
    pub method: CiMethod,
    pub per_point_quantiles: Vec<PointQuantiles<T>>,
    pub warnings: Vec<String>,
}

impl<T: Real> CiResult<T> {
    pub fn covers(&self, value: T) -> bool {
        self.lower <= value && value <= self.upper
    }

    pub fn width(&self) -> T {
        self.upper - self.lower
    }
}

pub(crate) fn check_resamples(m: usize) -> Result<()> {
    if m == 0 {
        Err(Error::InvalidArgument("number of resamples M must be positive".into()))
    } else {
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

/// `M / (1 + cv^2)` of a weight vector, i.e. `(Σw)^2 / Σw^2`.
pub fn effective_sample_size<T: Real>(weights: &[T]) -> f64 {
    let s: f64 = weights.iter().map(|w| w.as_f64()).sum();
    let s2: f64 = weights.iter().map(|w| w.as_f64().powi(2)).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

#[cfg(test)]
pub(crate) mod testing {
    //! Small models with closed-form answers for unit tests.
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// `X_1..X_n ~ N(mu, 1)`, summarized by its mean; `T = mean`, null `mu <= null_upper`.
    #[derive(Clone, Debug)]
    pub struct Gauss {
        pub null_upper: Option<f64>,
    }

    impl Model<f64> for Gauss {
        type Data = (usize, f64);
        fn dim(&self) -> usize {
            1
        }
        fn sample_size(&self, d: &(usize, f64)) -> usize {
            d.0
        }
        fn simulate(&self, phi: &[f64], n: usize, rng: &mut StreamRng) -> (usize, f64) {
            let z: f64 = StandardNormal.sample(rng);
            (n, phi[0] + z / (n as f64).sqrt())
        }
        fn estimate(&self, d: &(usize, f64)) -> Result<ParamPoint<f64>> {
            ParamPoint::new(vec![d.1])
        }
        fn neighborhood(&self, c: &ParamPoint<f64>, _n: usize, delta: f64) -> Result<Region<f64>> {
            let r = Region::cube(c.coords(), delta)?;
            Ok(match self.null_constraint() {
                Some(k) => r.with_constraint(k),
                None => r,
            })
        }
        fn statistic(&self, d: &(usize, f64)) -> Result<f64> {
            Ok(d.1)
        }
        fn target(&self, phi: &[f64]) -> Result<f64> {
            Ok(phi[0])
        }
        fn target_estimate(&self, d: &(usize, f64)) -> Result<f64> {
            Ok(d.1)
        }
        fn log_density(&self, d: &(usize, f64), phi: &[f64]) -> Result<f64> {
            // density of the sufficient statistic, up to a constant
            let n = d.0 as f64;
            Ok(-0.5 * n * (d.1 - phi[0]).powi(2))
        }
        fn null_constraint(&self) -> Option<Constraint<f64>> {
            self.null_upper.map(|b| Constraint::AtMost { index: 0, bound: b })
        }
    }

    /// `X ~ Binomial(n, p)`, `T = X`.
    #[derive(Clone, Debug)]
    pub struct Binom;

    impl Model<f64> for Binom {
        type Data = (usize, u64);
        fn dim(&self) -> usize {
            1
        }
        fn sample_size(&self, d: &(usize, u64)) -> usize {
            d.0
        }
        fn simulate(&self, phi: &[f64], n: usize, rng: &mut StreamRng) -> (usize, u64) {
            (n, (0..n).filter(|_| rng.random::<f64>() < phi[0]).count() as u64)
        }
        fn estimate(&self, d: &(usize, u64)) -> Result<ParamPoint<f64>> {
            ParamPoint::new(vec![d.1 as f64 / d.0 as f64])
        }
        fn neighborhood(&self, c: &ParamPoint<f64>, _n: usize, delta: f64) -> Result<Region<f64>> {
            Region::new(vec![(c[0] - delta).max(0.0)], vec![(c[0] + delta).min(1.0)])
        }
        fn statistic(&self, d: &(usize, u64)) -> Result<f64> {
            Ok(d.1 as f64)
        }
    }

    /// Data is a point mass; everything is constant.
    #[derive(Clone, Debug)]
    pub struct Constant;

    impl Model<f64> for Constant {
        type Data = f64;
        fn dim(&self) -> usize {
            1
        }
        fn sample_size(&self, _d: &f64) -> usize {
            1
        }
        fn simulate(&self, phi: &[f64], _n: usize, _rng: &mut StreamRng) -> f64 {
            phi[0]
        }
        fn estimate(&self, d: &f64) -> Result<ParamPoint<f64>> {
            ParamPoint::new(vec![*d])
        }
        fn neighborhood(&self, c: &ParamPoint<f64>, _n: usize, delta: f64) -> Result<Region<f64>> {
            Region::cube(c.coords(), delta)
        }
        fn statistic(&self, _d: &f64) -> Result<f64> {
            Ok(1.0)
        }
        fn target(&self, phi: &[f64]) -> Result<f64> {
            Ok(phi[0])
        }
        fn target_estimate(&self, d: &f64) -> Result<f64> {
            Ok(*d)
        }
        fn log_density(&self, _d: &f64, _phi: &[f64]) -> Result<f64> {
            Ok(0.0)
        }
    }

    pub fn binom_tail(n: u64, p: f64, t: u64) -> f64 {
        (t..=n)
            .map(|x| {
                let c: f64 = (0..x).map(|i| (n - i) as f64 / (i + 1) as f64).product();
                c * p.powi(x as i32) * (1.0 - p).powi((n - x) as i32)
            })
            .sum()
    }

    pub fn normal_sf(z: f64) -> f64 {
        use statrs::distribution::{ContinuousCDF, Normal};
        1.0 - Normal::standard().cdf(z)
    }

    pub fn normal_quantile(p: f64) -> f64 {
        use statrs::distribution::{ContinuousCDF, Normal};
        Normal::standard().inverse_cdf(p)
    }
}
