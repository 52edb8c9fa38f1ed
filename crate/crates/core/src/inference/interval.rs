use rayon::prelude::*;

use super::{check_alpha, check_resamples, CiMethod, CiResult, Model, PointQuantiles, Side};
use crate::design::{ParamPoint, TryDesign};
use crate::error::{Error, Result};
use crate::quantile::sample_quantiles;
use crate::scalar::Real;
use crate::streams::Streams;

/// `xi(phi) - xi_hat(X*_m)` for `resamples` datasets of size `n` drawn at
/// `phi` on the streams of try point `index`.
fn pivots<T: Real, M: Model<T>>(
    model: &M,
    phi: &[T],
    index: usize,
    n: usize,
    resamples: usize,
    streams: &Streams,
) -> Result<Vec<T>> {
    let xi = model.target(phi)?;
    (0..resamples)
        .into_par_iter()
        .map(|m| {
            let x = model.simulate(phi, n, &mut streams.rng(index, m));
            Ok(xi - model.target_estimate(&x)?)
        })
        .collect()
}

fn point_quantiles<T: Real>(point: ParamPoint<T>, pivots: &[T], side: Side, alpha: f64) -> Result<PointQuantiles<T>> {
    let (lo, hi) = side.levels(alpha);
    let gammas: Vec<f64> = lo.into_iter().chain(hi).collect();
    let q = sample_quantiles(pivots, &gammas)?;
    let mut it = q.into_iter();
    Ok(PointQuantiles { point, lower: lo.and_then(|_| it.next()), upper: hi.and_then(|_| it.next()) })
}

/// `xi_hat + min` of lower quantiles and `xi_hat + max` of upper quantiles.
fn assemble<T: Real>(
    estimate: T,
    per_point: Vec<PointQuantiles<T>>,
    alpha: f64,
    method: CiMethod,
    scale: T,
) -> CiResult<T> {
    let lower = per_point
        .iter()
        .filter_map(|p| p.lower)
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.min(v))))
        .map_or(T::neg_infinity(), |q| estimate + q / scale);
    let upper = per_point
        .iter()
        .filter_map(|p| p.upper)
        .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.max(v))))
        .map_or(T::infinity(), |q| estimate + q / scale);
    CiResult {
        lower,
        upper,
        estimate,
        level: 1.0 - alpha,
        method,
        per_point_quantiles: per_point,
        warnings: Vec::new(),
    }
}

/// Hybrid bootstrap interval from resamples at the estimate.
pub fn bootstrap_ci<T: Real, M: Model<T>>(
    model: &M,
    data: &M::Data,
    resamples: usize,
    streams: &Streams,
    alpha: f64,
    side: Side,
) -> Result<CiResult<T>> {
    check_resamples(resamples)?;
    check_alpha(alpha)?;
    let xi_hat = model.target_estimate(data)?;
    let theta = model.estimate(data)?;
    let n = model.sample_size(data);
    let piv = pivots(model, theta.coords(), 0, n, resamples, streams)?;
    let pq = point_quantiles(theta, &piv, side, alpha)?;
    Ok(assemble(xi_hat, vec![pq], alpha, CiMethod::BootstrapHybrid, T::one()))
}

/// LOCI by the neighborhood bootstrap: pivot quantiles at each try point,
/// extremes taken over the design.
///
/// The design should cover the full neighborhood (no null restriction).
pub fn nb_ci<T: Real, M: Model<T>>(
    model: &M,
    data: &M::Data,
    design: &TryDesign<T>,
    resamples: usize,
    streams: &Streams,
    alpha: f64,
    side: Side,
) -> Result<CiResult<T>> {
    check_resamples(resamples)?;
    check_alpha(alpha)?;
    if design.is_empty() {
        return Err(Error::Empty("try design"));
    }
    let xi_hat = model.target_estimate(data)?;
    let n = model.sample_size(data);
    let per_point: Vec<PointQuantiles<T>> = design
        .points()
        .par_iter()
        .enumerate()
        .map(|(l, phi)| {
            let piv = pivots(model, phi.coords(), l, n, resamples, streams)?;
            point_quantiles(phi.clone(), &piv, side, alpha)
        })
        .collect::<Result<_>>()?;
    Ok(assemble(xi_hat, per_point, alpha, CiMethod::NeighborhoodBootstrap, T::one()))
}

/// Integer part of `2 sqrt(n)`, at least 1 and at most `n`.
pub fn default_m(n: usize) -> usize {
    ((2.0 * (n as f64).sqrt()).floor() as usize).clamp(1, n.max(1))
}

/// m-out-of-n bootstrap: resamples of size `m` at the estimate, pivots
/// `sqrt(m) (xi(theta_hat) - xi_hat*)`, limits `xi_hat + q / sqrt(n)`.
pub fn m_out_of_n_ci<T: Real, M: Model<T>>(
    model: &M,
    data: &M::Data,
    m: usize,
    resamples: usize,
    streams: &Streams,
    alpha: f64,
    side: Side,
) -> Result<CiResult<T>> {
    check_resamples(resamples)?;
    check_alpha(alpha)?;
    let n = model.sample_size(data);
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("subsample size m={m} must lie in [1, {n}]")));
    }
    let xi_hat = model.target_estimate(data)?;
    let theta = model.estimate(data)?;
    let root_m = T::from_count(m).sqrt();
    let piv: Vec<T> =
        pivots(model, theta.coords(), 0, m, resamples, streams)?.into_iter().map(|v| v * root_m).collect();
    let pq = point_quantiles(theta, &piv, side, alpha)?;
    Ok(assemble(xi_hat, vec![pq], alpha, CiMethod::MOutOfN, T::from_count(n).sqrt()))
}
