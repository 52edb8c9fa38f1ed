use rayon::prelude::*;

use super::{check_resamples, Model, PValueMethod, PValueResult, PointValue};
use crate::design::{ParamPoint, TryDesign};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::streams::Streams;

/// Monte Carlo estimate of `P_phi(T >= t)` from `resamples` draws on the
/// streams of try point `index`.
pub(crate) fn rejection_rate<T: Real, M: Model<T>>(
    model: &M,
    phi: &[T],
    index: usize,
    n: usize,
    t: T,
    resamples: usize,
    streams: &Streams,
) -> Result<T> {
    let hits = (0..resamples)
        .into_par_iter()
        .map(|m| {
            let x = model.simulate(phi, n, &mut streams.rng(index, m));
            Ok(usize::from(model.statistic(&x)? >= t))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(T::from_count(hits) / T::from_count(resamples))
}

/// Ordinary parametric bootstrap p-value: resamples at the estimate.
pub fn bootstrap_pvalue<T: Real, M: Model<T>>(
    model: &M,
    data: &M::Data,
    resamples: usize,
    streams: &Streams,
) -> Result<PValueResult<T>> {
    check_resamples(resamples)?;
    let t = model.statistic(data)?;
    let theta = model.estimate(data)?;
    let n = model.sample_size(data);
    let p = rejection_rate(model, theta.coords(), 0, n, t, resamples, streams)?;
    Ok(PValueResult {
        p,
        statistic: t,
        per_point: vec![PointValue { point: theta, value: p }],
        method: PValueMethod::Bootstrap,
        resamples,
        warnings: Vec::new(),
    })
}

/// Neighborhood-bootstrap LOT p-value: the largest Monte Carlo rejection
/// probability over the try points, with fresh resamples at each point.
///
/// The design should cover the neighborhood intersected with the null set.
pub fn nb_pvalue<T: Real, M: Model<T>>(
    model: &M,
    data: &M::Data,
    design: &TryDesign<T>,
    resamples: usize,
    streams: &Streams,
) -> Result<PValueResult<T>> {
    check_resamples(resamples)?;
    if design.is_empty() {
        return Err(Error::Empty("try design"));
    }
    let t = model.statistic(data)?;
    let n = model.sample_size(data);
    let values: Vec<T> = design
        .points()
        .par_iter()
        .enumerate()
        .map(|(l, phi)| rejection_rate(model, phi.coords(), l, n, t, resamples, streams))
        .collect::<Result<_>>()?;
    Ok(PValueResult {
        p: max_value(&values),
        statistic: t,
        per_point: pair(design.points(), values),
        method: PValueMethod::NeighborhoodBootstrap,
        resamples,
        warnings: Vec::new(),
    })
}

pub(crate) fn max_value<T: Real>(values: &[T]) -> T {
    values.iter().copied().fold(T::neg_infinity(), T::max)
}

pub(crate) fn pair<T: Real>(points: &[ParamPoint<T>], values: Vec<T>) -> Vec<PointValue<T>> {
    points.iter().cloned().zip(values).map(|(point, value)| PointValue { point, value }).collect()
}
