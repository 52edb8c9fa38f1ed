//! Derivative-free maximization: Nelder–Mead with optional box clipping and
//! a multistart wrapper.

use serde::Serialize;

use crate::design::{ParamPoint, Region};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_TOL: f64 = 1e-8;

/// Default evaluation budget for a problem of dimension `dim`.
pub fn default_budget(dim: usize) -> usize {
    500 * dim.max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OptResult<T> {
    pub point: ParamPoint<T>,
    pub value: T,
    pub evaluations: usize,
    pub converged: bool,
}

/// Box for clipping iterates; `None` means unconstrained.
type Bounds<'a, T> = Option<(&'a [T], &'a [T])>;

/// Maximizes `objective` from `start` with initial simplex steps `scale`.
///
/// Non-finite values met during the search count as `-inf`. A coordinate
/// with zero scale is held fixed.
pub fn nelder_mead<T: Real, F>(objective: F, start: &[T], scale: &[T], budget: usize, tol: T) -> Result<OptResult<T>>
where
    F: FnMut(&[T]) -> T,
{
    run(objective, start, scale, None, budget, tol)
}

/// As [`nelder_mead`], with every iterate clipped into `[lower, upper]`.
pub fn nelder_mead_bounded<T: Real, F>(
    objective: F,
    start: &[T],
    scale: &[T],
    lower: &[T],
    upper: &[T],
    budget: usize,
    tol: T,
) -> Result<OptResult<T>>
where
    F: FnMut(&[T]) -> T,
{
    if lower.len() != start.len() || upper.len() != start.len() {
        return Err(Error::DimensionMismatch { expected: start.len(), got: lower.len().min(upper.len()) });
    }
    run(objective, start, scale, Some((lower, upper)), budget, tol)
}

fn clip<T: Real>(x: &mut [T], bounds: Bounds<'_, T>) {
    if let Some((lo, hi)) = bounds {
        for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
            *v = v.max(l).min(h);
        }
    }
}

fn run<T: Real, F>(
    mut objective: F,
    start: &[T],
    scale: &[T],
    bounds: Bounds<'_, T>,
    budget: usize,
    tol: T,
) -> Result<OptResult<T>>
where
    F: FnMut(&[T]) -> T,
{
    let n = start.len();
    if n == 0 {
        return Err(Error::Empty("optimizer start point"));
    }
    if scale.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: scale.len() });
    }
    if scale.iter().any(|s| !s.is_finite() || *s < T::zero()) {
        return Err(Error::InvalidArgument("simplex scale must be finite and nonnegative".into()));
    }
    let active: Vec<usize> = (0..n).filter(|&j| scale[j] > T::zero()).collect();
    let k = active.len();
    if budget < k + 1 {
        return Err(Error::InvalidArgument(format!("budget {budget} is below dim+1 = {}", k + 1)));
    }

    let mut x0 = start.to_vec();
    clip(&mut x0, bounds);
    let f0 = objective(&x0);
    if !f0.is_finite() {
        return Err(Error::NonFinite(format!("objective is {f0} at the start point")));
    }
    let mut evals = 1usize;
    if k == 0 {
        return Ok(OptResult { point: ParamPoint::new(x0)?, value: f0, evaluations: evals, converged: true });
    }

    let mut eval = |x: &[T], evals: &mut usize| -> T {
        *evals += 1;
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            T::neg_infinity()
        }
    };

    let mut simplex: Vec<Vec<T>> = vec![x0.clone()];
    let mut values: Vec<T> = vec![f0];
    for &j in &active {
        let mut v = x0.clone();
        v[j] += scale[j];
        if let Some((_, hi)) = bounds {
            // step inward if the outward step was clipped away
            if v[j] > hi[j] {
                v[j] = x0[j] - scale[j];
            }
        }
        clip(&mut v, bounds);
        values.push(eval(&v, &mut evals));
        simplex.push(v);
    }

    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut converged = false;
    let mut order: Vec<usize> = (0..=k).collect();
    loop {
        // best first; stable so earlier vertices win ties
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        let worst = order[k];
        let second_worst = order[k - 1];

        let diameter = simplex
            .iter()
            .map(|v| active.iter().fold(T::zero(), |m, &j| m.max((v[j] - simplex[best][j]).abs())))
            .fold(T::zero(), |a, b| a.max(b));
        let spread = values[best] - values[worst];
        if diameter < tol || (values[worst].is_finite() && spread < tol) {
            converged = true;
            break;
        }
        if evals >= budget {
            break;
        }

        let mut centroid = vec![T::zero(); n];
        for &i in order.iter().take(k) {
            for j in 0..n {
                centroid[j] += simplex[i][j];
            }
        }
        let kk = T::from_count(k);
        centroid.iter_mut().for_each(|c| *c /= kk);
        let along = |t: T| -> Vec<T> {
            let mut p: Vec<T> = centroid.iter().zip(&simplex[worst]).map(|(&c, &w)| c + t * (c - w)).collect();
            clip(&mut p, bounds);
            p
        };

        let xr = along(T::one());
        let fr = eval(&xr, &mut evals);
        if fr > values[best] {
            let xe = along(two);
            let fe = eval(&xe, &mut evals);
            if fe > fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
        } else if fr > values[second_worst] {
            simplex[worst] = xr;
            values[worst] = fr;
        } else {
            let outside = fr > values[worst];
            let xc = along(if outside { half } else { -half });
            let fc = eval(&xc, &mut evals);
            let accept = if outside { fc >= fr } else { fc > values[worst] };
            if accept {
                simplex[worst] = xc;
                values[worst] = fc;
            } else {
                // shrink toward the best vertex
                let xb = simplex[best].clone();
                for i in 0..=k {
                    if i == best {
                        continue;
                    }
                    let mut p: Vec<T> = xb.iter().zip(&simplex[i]).map(|(&b, &v)| b + half * (v - b)).collect();
                    clip(&mut p, bounds);
                    values[i] = eval(&p, &mut evals);
                    simplex[i] = p;
                }
            }
        }
    }

    let best = (0..=k).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    Ok(OptResult { point: ParamPoint::new(simplex[best].clone())?, value: values[best], evaluations: evals, converged })
}

/// Runs Nelder–Mead from each start, clipped to the region box, and returns
/// the best result. Ties go to the lowest start index. The initial step in
/// each coordinate is a tenth of the box width.
pub fn multistart_max<T: Real, F>(
    objective: F,
    starts: &[ParamPoint<T>],
    region: &Region<T>,
    budget_per_start: usize,
    tol: T,
) -> Result<OptResult<T>>
where
    F: Fn(&[T]) -> T,
{
    if starts.is_empty() {
        return Err(Error::Empty("multistart start list"));
    }
    let scale: Vec<T> = region.lower().iter().zip(region.upper()).map(|(&l, &u)| T::lit(0.1) * (u - l)).collect();
    let mut best: Option<OptResult<T>> = None;
    let mut total = 0;
    for s in starts {
        if !region.in_box(s.coords()) {
            return Err(Error::InvalidArgument("multistart start lies outside the region box".into()));
        }
        let start_value = objective(s.coords());
        let mut r =
            nelder_mead_bounded(&objective, s.coords(), &scale, region.lower(), region.upper(), budget_per_start, tol)?;
        if start_value > r.value {
            // can only happen if the clipped start differs; keep the start
            r.point = s.clone();
            r.value = start_value;
        }
        total += r.evaluations + 1;
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let mut out = best.expect("starts is non-empty");
    out.evaluations = total;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_dimensional_quadratic() {
        let r = nelder_mead(|x: &[f64]| -(x[0] - 3.0).powi(2), &[0.0], &[1.0], 200, 1e-10).unwrap();
        assert!((r.point[0] - 3.0).abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn two_dimensional_bowl() {
        let r = nelder_mead(|x: &[f64]| -(x[0] * x[0] + x[1] * x[1]), &[1.0, 1.0], &[0.5, 0.5], 1000, 1e-12).unwrap();
        assert!(r.point[0].abs() < 1e-4 && r.point[1].abs() < 1e-4, "{r:?}");
        assert!(r.converged);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let r = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], 5000, 1e-14).unwrap();
        assert!((r.point[0] - 1.0).abs() < 1e-3 && (r.point[1] - 1.0).abs() < 1e-3, "{r:?}");
    }

    #[test]
    fn value_matches_objective_at_point() {
        let f = |x: &[f64]| (x[0] * 1.7).sin() - 0.1 * x[1].powi(2);
        let r = nelder_mead(f, &[0.3, 2.0], &[0.2, 0.2], 800, 1e-10).unwrap();
        assert!((f(r.point.coords()) - r.value).abs() <= 1e-12);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let r = nelder_mead(|_: &[f64]| f64::NAN, &[0.0], &[1.0], 10, 1e-8);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn non_finite_during_search_is_avoided() {
        let f = |x: &[f64]| if x[0] > 1.0 { f64::NAN } else { x[0] };
        let r = nelder_mead(f, &[0.0], &[0.5], 500, 1e-10).unwrap();
        assert!(r.value <= 1.0 && r.value > 0.99, "{r:?}");
    }

    #[test]
    fn bad_arguments() {
        assert!(nelder_mead(|x: &[f64]| x[0], &[0.0, 0.0], &[1.0, 1.0], 2, 1e-8).is_err());
        assert!(nelder_mead(|x: &[f64]| x[0], &[0.0], &[-1.0], 20, 1e-8).is_err());
        assert!(nelder_mead(|x: &[f64]| x[0], &[0.0], &[1.0, 1.0], 20, 1e-8).is_err());
    }

    #[test]
    fn zero_scale_holds_coordinate() {
        let r = nelder_mead(|x: &[f64]| -(x[0] - 1.0).powi(2) - x[1].powi(2), &[0.0, 5.0], &[1.0, 0.0], 300, 1e-10)
            .unwrap();
        assert_eq!(r.point[1], 5.0);
        assert!((r.point[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn multistart_constant() {
        let region = Region::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let starts = vec![ParamPoint::new(vec![0.5, 0.5]).unwrap()];
        let r = multistart_max(|_: &[f64]| 2.5, &starts, &region, 100, 1e-8).unwrap();
        assert_eq!(r.value, 2.5);
    }

    #[test]
    fn multistart_interior_optimum() {
        let region = Region::new(vec![0.0], vec![1.0]).unwrap();
        let starts = vec![ParamPoint::new(vec![0.4]).unwrap()];
        let r = multistart_max(|x: &[f64]| -(x[0] - 0.4).powi(2), &starts, &region, 100, 1e-10).unwrap();
        assert!((r.point[0] - 0.4).abs() < 1e-4);
    }

    #[test]
    fn multistart_bimodal_matches_grid_oracle() {
        let f = |x: &[f64]| (-(x[0] + 1.0).powi(2) * 8.0).exp() + 1.3 * (-(x[0] - 1.2).powi(2) * 5.0).exp();
        let region = Region::new(vec![-3.0], vec![3.0]).unwrap();
        let starts = vec![ParamPoint::new(vec![-1.1]).unwrap(), ParamPoint::new(vec![1.0]).unwrap()];
        let r = multistart_max(f, &starts, &region, 400, 1e-12).unwrap();
        let grid_max = (0..=600_000).map(|i| f(&[-3.0 + 6.0 * i as f64 / 600_000.0])).fold(f64::MIN, f64::max);
        assert!((r.value - grid_max).abs() < 1e-8, "{} vs {grid_max}", r.value);
        assert!((r.point[0] - 1.2).abs() < 1e-3);
    }

    #[test]
    fn multistart_stays_in_box() {
        let region = Region::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let starts = vec![ParamPoint::new(vec![0.5, 0.5]).unwrap()];
        let r = multistart_max(|x: &[f64]| x[0] + x[1], &starts, &region, 400, 1e-10).unwrap();
        assert!(region.in_box(r.point.coords()));
        assert!((r.value - 3.0).abs() < 1e-6);
    }

    #[test]
    fn multistart_tie_goes_to_first_start() {
        let region = Region::new(vec![-2.0], vec![2.0]).unwrap();
        let f = |x: &[f64]| -((x[0] * x[0] - 1.0).powi(2));
        let starts = vec![ParamPoint::new(vec![-0.9]).unwrap(), ParamPoint::new(vec![0.9]).unwrap()];
        let r = multistart_max(f, &starts, &region, 400, 1e-14).unwrap();
        assert!(r.point[0] < 0.0);
    }

    #[test]
    fn single_precision_quadratic() {
        let r = nelder_mead(|x: &[f32]| -(x[0] - 2.0).powi(2), &[0.0f32], &[0.5], 200, 1e-6).unwrap();
        assert!((r.point[0] - 2.0).abs() < 1e-2);
    }

    proptest! {
        #[test]
        fn never_below_best_start(a in -2.0f64..2.0, b in -2.0f64..2.0, s0 in -3.0f64..3.0, s1 in -3.0f64..3.0) {
            let f = move |x: &[f64]| (a * x[0]).sin() + (b * x[0]).cos() - 0.05 * x[0] * x[0];
            let region = Region::new(vec![-3.0], vec![3.0]).unwrap();
            let starts = vec![ParamPoint::new(vec![s0]).unwrap(), ParamPoint::new(vec![s1]).unwrap()];
            let r = multistart_max(f, &starts, &region, 200, 1e-8).unwrap();
            prop_assert!(r.value >= f(&[s0]).max(f(&[s1])));
            prop_assert!(region.in_box(r.point.coords()));
        }
    }
}
