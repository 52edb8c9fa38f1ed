//! Importance-sampling versions of the LOT p-value and the LOCI upper limit.
//!
//! One set of resamples is drawn at the estimate and frozen; the rejection
//! probability (or pivot distribution) at any other `phi` is recovered by
//! reweighting with the likelihood ratio `f(X*, phi) / f(X*, theta_hat)`.

use rayon::prelude::*;

use super::pvalue::{max_value, pair};
use super::{
    check_resamples, effective_sample_size, CiMethod, CiResult, Model, PValueMethod, PValueResult, PointQuantiles,
    PointValue, ESS_WARNING_THRESHOLD,
};
use crate::design::{ParamPoint, Region, TryDesign};
use crate::error::{Error, Result};
use crate::numopt::{default_budget, multistart_max, DEFAULT_TOL};
use crate::quantile::weighted_quantile;
use crate::scalar::Real;
use crate::streams::Streams;

/// Resamples drawn once at the estimate, with what the weighted estimators need.
pub struct ImportanceSet<T: Real, D> {
    theta: ParamPoint<T>,
    statistic: Option<T>,
    resamples: Vec<D>,
    exceeds: Vec<bool>,
    base_log_density: Vec<T>,
    target_estimates: Option<Vec<T>>,
}

impl<T: Real, D: Send + Sync> ImportanceSet<T, D> {
    /// Draws `resamples` datasets at the estimate on the streams of point 0.
    ///
    /// Indicators `T(X*) >= t` are recorded when the model has a statistic;
    /// target estimates when `with_targets` is set.
    pub fn draw<M: Model<T, Data = D>>(
        model: &M,
        data: &D,
        resamples: usize,
        streams: &Streams,
        with_targets: bool,
    ) -> Result<Self> {
        check_resamples(resamples)?;
        let theta = model.estimate(data)?;
        let n = model.sample_size(data);
        let statistic = if with_targets { None } else { Some(model.statistic(data)?) };
        let sims: Vec<D> =
            (0..resamples).into_par_iter().map(|m| model.simulate(theta.coords(), n, &mut streams.rng(0, m))).collect();
        let base_log_density: Vec<T> = sims
            .par_iter()
            .map(|x| {
                let v = model.log_density(x, theta.coords())?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite(format!("log density {v} at the estimate")))
                }
            })
            .collect::<Result<_>>()?;
        let exceeds = match statistic {
            Some(t) => sims.par_iter().map(|x| Ok(model.statistic(x)? >= t)).collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let target_estimates = if with_targets {
            Some(sims.par_iter().map(|x| model.target_estimate(x)).collect::<Result<_>>()?)
        } else {
            None
        };
        Ok(Self { theta, statistic, resamples: sims, exceeds, base_log_density, target_estimates })
    }

    pub fn len(&self) -> usize {
        self.resamples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resamples.is_empty()
    }

    pub fn theta(&self) -> &ParamPoint<T> {
        &self.theta
    }

    /// Likelihood ratios of every resample at `phi`; a zero density gives weight 0.
    pub fn weights<M: Model<T, Data = D>>(&self, model: &M, phi: &[T]) -> Result<Vec<T>> {
        self.resamples
            .iter()
            .zip(&self.base_log_density)
            .map(|(x, &base)| ratio(model.log_density(x, phi)?, base))
            .collect()
    }
}

fn ratio<T: Real>(log_f: T, base: T) -> Result<T> {
    if log_f == T::neg_infinity() {
        Ok(T::zero())
    } else if log_f.is_finite() {
        Ok((log_f - base).exp())
    } else {
        Err(Error::NonFinite(format!("log density is {log_f}")))
    }
}

/// `u_hat(phi) = (1/M) sum 1{T(X*_m) >= t} f(X*_m, phi) / f(X*_m, theta_hat)`.
///
/// Only resamples that exceed `t` need their density evaluated.
pub fn is_objective<T: Real, M: Model<T>>(model: &M, set: &ImportanceSet<T, M::Data>, phi: &[T]) -> Result<T> {
    if set.statistic.is_none() {
        return Err(Error::Unsupported("importance set was drawn without a statistic"));
    }
    let mut sum = T::zero();
    for ((x, &base), &hit) in set.resamples.iter().zip(&set.base_log_density).zip(&set.exceeds) {
        if hit {
            sum += ratio(model.log_density(x, phi)?, base)?;
        }
    }
    Ok(sum / T::from_count(set.len()))
}

fn ess_warning<T: Real>(label: &str, point: usize, weights: &[T]) -> Option<String> {
    let ess = effective_sample_size(weights);
    (ess < ESS_WARNING_THRESHOLD).then(|| format!("{label}: effective sample size {ess:.1} at try point {point}"))
}

/// Design version: `min(1, max over try points of u_hat)` on one frozen set.
pub fn is_pvalue_design<T: Real, M: Model<T>>(
    model: &M,
    data: &M::Data,
    design: &TryDesign<T>,
    resamples: usize,
    streams: &Streams,
) -> Result<PValueResult<T>> {
    let set = ImportanceSet::draw(model, data, resamples, streams, false)?;
    design_result(model, &set, design)
}

fn design_result<T: Real, M: Model<T>>(
    model: &M,
    set: &ImportanceSet<T, M::Data>,
    design: &TryDesign<T>,
) -> Result<PValueResult<T>> {
    if design.is_empty() {
        return Err(Error::Empty("try design"));
    }
    let m = T::from_count(set.len());
    let evaluated: Vec<(T, Option<String>)> = design
        .points()
        .par_iter()
        .enumerate()
        .map(|(l, phi)| {
            let w = set.weights(model, phi.coords())?;
            let u = w.iter().zip(&set.exceeds).filter(|(_, &hit)| hit).map(|(w, _)| *w).sum::<T>() / m;
            Ok((u, ess_warning("importance weights", l, &w)))
        })
        .collect::<Result<_>>()?;
    let (values, warnings): (Vec<T>, Vec<Option<String>>) = evaluated.into_iter().unzip();
    let raw = max_value(&values);
    Ok(PValueResult {
        p: raw.min(T::one()),
        statistic: set.statistic.expect("drawn with a statistic"),
        per_point: pair(design.points(), values),
        method: PValueMethod::ImportanceDesign,
        resamples: set.len(),
        warnings: warnings.into_iter().flatten().collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineOptions {
    /// Number of best design points used as starts.
    pub starts: usize,
    /// Evaluations per start; `None` means `500 * dim`.
    pub budget_per_start: Option<usize>,
    pub tol: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { starts: 3, budget_per_start: None, tol: DEFAULT_TOL }
    }
}

/// Maximizes `u_hat` over `region` starting from the best design points.
/// The returned p is never below the design version on the same resamples;
/// the refined optimum is appended to `per_point`.
pub fn is_pvalue_refined<T: Real, M: Model<T>>(
    model: &M,
    data: &M::Data,
    region: &Region<T>,
    design: &TryDesign<T>,
    resamples: usize,
    streams: &Streams,
    options: RefineOptions,
) -> Result<PValueResult<T>> {
    let set = ImportanceSet::draw(model, data, resamples, streams, false)?;
    let mut result = design_result(model, &set, design)?;
    let mut order: Vec<usize> = (0..result.per_point.len()).collect();
    order.sort_by(|&a, &b| {
        result.per_point[b].value.partial_cmp(&result.per_point[a].value).unwrap_or(std::cmp::Ordering::Equal)
    });
    let starts: Vec<ParamPoint<T>> = order
        .iter()
        .take(options.starts.max(1))
        .map(|&i| result.per_point[i].point.clone())
        .filter(|p| region.in_box(p.coords()))
        .collect();
    let design_max = max_value(&result.per_point.iter().map(|p| p.value).collect::<Vec<_>>());
    if !starts.is_empty() {
        let budget = options.budget_per_start.unwrap_or_else(|| default_budget(region.design_dims().len()));
        let objective = |phi: &[T]| {
            if region.contains(phi) {
                is_objective(model, &set, phi).unwrap_or(T::neg_infinity())
            } else {
                T::neg_infinity()
            }
        };
        let best = multistart_max(objective, &starts, region, budget, T::lit(options.tol))?;
        if !best.converged {
            result.warnings.push(format!("refinement stopped after {} evaluations", best.evaluations));
        }
        if best.value > design_max {
            result.per_point.push(PointValue { point: best.point, value: best.value });
        }
    }
    let raw = max_value(&result.per_point.iter().map(|p| p.value).collect::<Vec<_>>());
    result.p = raw.min(T::one());
    result.method = PValueMethod::ImportanceRefined;
    Ok(result)
}

/// Upper LOCI limit by weighted pivot quantiles on one frozen set:
/// `xi_hat + max_l q_gamma(xi(phi_l) - xi_hat*; weights at phi_l)`.
///
/// Try points whose total weight is too small to reach `gamma` are skipped
/// with a warning; if that happens at every point the limit is `+inf`.
pub fn is_ci_upper<T: Real, M: Model<T>>(
    model: &M,
    data: &M::Data,
    design: &TryDesign<T>,
    resamples: usize,
    streams: &Streams,
    gamma: f64,
) -> Result<CiResult<T>> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level must lie in (0,1), got {gamma}")));
    }
    if design.is_empty() {
        return Err(Error::Empty("try design"));
    }
    let set = ImportanceSet::draw(model, data, resamples, streams, true)?;
    let xi_hat = model.target_estimate(data)?;
    let est = set.target_estimates.as_ref().expect("drawn with targets");
    let evaluated: Vec<(PointQuantiles<T>, Vec<String>)> = design
        .points()
        .par_iter()
        .enumerate()
        .map(|(l, phi)| {
            let xi = model.target(phi.coords())?;
            let piv: Vec<T> = est.iter().map(|&e| xi - e).collect();
            let w = set.weights(model, phi.coords())?;
            let mut warn: Vec<String> = ess_warning("importance weights", l, &w).into_iter().collect();
            let q = if w.iter().all(|v| *v == T::zero()) { T::infinity() } else { weighted_quantile(&piv, &w, gamma)? };
            if q.is_infinite() {
                warn.push(format!("weighted mass below {gamma} at try point {l}"));
            }
            Ok((PointQuantiles { point: phi.clone(), lower: None, upper: Some(q) }, warn))
        })
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let mut per_point = Vec::with_capacity(evaluated.len());
    for (pq, w) in evaluated {
        warnings.extend(w);
        per_point.push(pq);
    }
    let best = per_point
        .iter()
        .filter_map(|p| p.upper)
        .filter(|q| q.is_finite())
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.max(v))));
    let upper = match best {
        Some(q) => xi_hat + q,
        None => {
            warnings.push("no try point reached the requested weighted mass; upper limit is unbounded".into());
            T::infinity()
        }
    };
    Ok(CiResult {
        lower: T::neg_infinity(),
        upper,
        estimate: xi_hat,
        level: gamma,
        method: CiMethod::ImportanceWeighted,
        per_point_quantiles: per_point,
        warnings,
    })
}
