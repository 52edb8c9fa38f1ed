//! Location parameter of the three-parameter Weibull distribution, estimated
//! by maximum product of spacings (MPS).

use loci_core::{nelder_mead, Error, Model, ParamPoint, Region, Result, StreamRng};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Smallest spacing allowed inside the logarithm.
pub const SPACING_FLOOR: f64 = 1e-300;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Smallest scale or shape a neighborhood box may reach.
const POSITIVE_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    /// Scale.
    pub a: f64,
    /// Shape.
    pub b: f64,
    /// Location.
    pub tau: f64,
}

impl WeibullParams {
    pub fn new(a: f64, b: f64, tau: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("invalid Weibull parameters ({a}, {b}, {tau})")));
        }
        Ok(Self { a, b, tau })
    }

    pub fn from_slice(phi: &[f64]) -> Result<Self> {
        match phi {
            [a, b, tau] => Self::new(*a, *b, *tau),
            _ => Err(Error::DimensionMismatch { expected: 3, got: phi.len() }),
        }
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.a, self.b, self.tau]
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.tau {
            0.0
        } else {
            -(-((x - self.tau) / self.a).powf(self.b)).exp_m1()
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= self.tau {
            return 0.0;
        }
        let z = (x - self.tau) / self.a;
        self.b / self.a * z.powf(self.b - 1.0) * (-z.powf(self.b)).exp()
    }

    /// `tau + a (-ln(1 - u))^(1/b)`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.tau + self.a * (-(-u).ln_1p()).powf(1.0 / self.b)
    }
}

/// Sample kept in ascending order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeibullSample {
    sorted: Vec<f64>,
}

impl WeibullSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("Weibull sample"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("Weibull sample value".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { sorted: values })
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

pub fn simulate(params: &WeibullParams, n: usize, rng: &mut StreamRng) -> WeibullSample {
    let mut v: Vec<f64> = (0..n).map(|_| params.quantile(rng.random::<f64>())).collect();
    v.sort_by(f64::total_cmp);
    WeibullSample { sorted: v }
}

/// Log of the product of spacings `F(X_(i)) - F(X_(i-1))`, `i = 1..n+1`,
/// with `F(X_(0)) = 0` and `F(X_(n+1)) = 1`. Returns `-inf` when
/// `tau >= X_(1)` or the scale/shape is not positive.
pub fn mps_objective(a: f64, b: f64, tau: f64, sorted: &[f64]) -> f64 {
    if sorted.is_empty() || !(a > 0.0 && b > 0.0) || tau >= sorted[0] || !tau.is_finite() {
        return f64::NEG_INFINITY;
    }
    let floor = SPACING_FLOOR.ln();
    let ln_a = a.ln();
    // z_i = ((x_i - tau)/a)^b; spacing_i = exp(-z_{i-1}) (1 - exp(-(z_i - z_{i-1})))
    let mut prev = 0.0;
    let mut total = 0.0;
    for &x in sorted {
        let z = (b * ((x - tau).ln() - ln_a)).exp();
        let gap = z - prev;
        let term = if gap > 0.0 { -prev + (-(-gap).exp_m1()).ln() } else { f64::NEG_INFINITY };
        total += term.max(floor);
        prev = z;
    }
    total + (-prev).max(floor)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MpsFit {
    pub params: WeibullParams,
    pub value: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Maximizes [`mps_objective`] over `(ln a, ln b, u)` with `tau = X_(1) - e^u`.
///
/// Four heuristic starts are scored (locations `X_(1) - s * range`, shape and
/// scale from the Gumbel moments of `ln(X - tau)`); Nelder–Mead runs from
/// the best of them and is restarted once from its own optimum.
pub fn mps_estimate(sample: &WeibullSample) -> Result<MpsFit> {
    let x = sample.sorted();
    let n = x.len();
    let range = x[n - 1] - x[0];
    if n < 3 || !(range > 0.0) {
        return Err(Error::InvalidArgument("MPS estimation needs at least three distinct values".into()));
    }
    let x1 = x[0];
    let objective = |v: &[f64]| mps_objective(v[0].exp(), v[1].exp(), x1 - v[2].exp(), x);

    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in [0.01, 0.1, 0.3, 1.0] {
        let tau0 = x1 - s * range;
        let logs: Vec<f64> = x.iter().map(|v| (v - tau0).ln()).collect();
        let mean = logs.iter().sum::<f64>() / n as f64;
        let sd = (logs.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let b0 = (std::f64::consts::PI / (6f64.sqrt() * sd.max(1e-8))).clamp(1e-3, 1e3);
        let a0 = (mean + EULER_GAMMA / b0).exp();
        let v0 = vec![a0.ln(), b0.ln(), (s * range).ln()];
        let f0 = objective(&v0);
        if f0.is_finite() && best.as_ref().is_none_or(|(_, fb)| f0 > *fb) {
            best = Some((v0, f0));
        }
    }
    let (start, _) = best.ok_or_else(|| Error::Numerical("no finite MPS start".into()))?;
    let scale = [0.3, 0.3, 1.0];
    let first = nelder_mead(objective, &start, &scale, 1500, 1e-10)?;
    let second = nelder_mead(objective, first.point.coords(), &[0.1, 0.1, 0.3], 1500, 1e-10)?;
    let fit = if second.value >= first.value { &second } else { &first };
    let v = fit.point.coords();
    Ok(MpsFit {
        params: WeibullParams { a: v[0].exp(), b: v[1].exp(), tau: x1 - v[2].exp() },
        value: fit.value,
        converged: fit.converged,
        evaluations: first.evaluations + second.evaluations,
    })
}

/// `4 exp(-(1/b)^5) log(n) / sqrt(n)`.
pub fn neighborhood_half_width(b_hat: f64, n: usize) -> f64 {
    let nf = n as f64;
    4.0 * (-(1.0 / b_hat).powi(5)).exp() * nf.ln() / nf.sqrt()
}

/// Model over `(a, b, tau)` with target `tau`.
#[derive(Clone, Debug, Default)]
pub struct WeibullModel;

impl Model<f64> for WeibullModel {
    type Data = WeibullSample;

    fn dim(&self) -> usize {
        3
    }

    fn sample_size(&self, data: &WeibullSample) -> usize {
        data.len()
    }

    fn simulate(&self, phi: &[f64], n: usize, rng: &mut StreamRng) -> WeibullSample {
        let p = WeibullParams { a: phi[0], b: phi[1], tau: phi[2] };
        simulate(&p, n, rng)
    }

    fn estimate(&self, data: &WeibullSample) -> Result<ParamPoint<f64>> {
        ParamPoint::new(mps_estimate(data)?.params.to_vec())?.with_labels(self.labels().expect("labels"))
    }

    /// Cube of half-width `delta_n` (ignoring `delta`), with `a` and `b` kept positive.
    fn neighborhood(&self, center: &ParamPoint<f64>, n: usize, _delta: f64) -> Result<Region<f64>> {
        let c = center.coords();
        let h = neighborhood_half_width(c[1], n);
        Region::new(
            vec![(c[0] - h).max(POSITIVE_FLOOR), (c[1] - h).max(POSITIVE_FLOOR), c[2] - h],
            vec![c[0] + h, c[1] + h, c[2] + h],
        )
    }

    fn target(&self, phi: &[f64]) -> Result<f64> {
        Ok(phi[2])
    }

    fn target_estimate(&self, data: &WeibullSample) -> Result<f64> {
        Ok(mps_estimate(data)?.params.tau)
    }

    fn labels(&self) -> Option<Vec<String>> {
        Some(vec!["a".into(), "b".into(), "tau".into()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use loci_core::Streams;

    fn rng(seed: u64) -> StreamRng {
        Streams::new(seed).rng(0, 0)
    }

    #[test]
    fn unit_quantile_identity() {
        let u = 1.0 - (-1.0f64).exp();
        for b in [0.5, 1.0, 2.5] {
            let p = WeibullParams::new(2.0, b, 1.0).unwrap();
            assert!((p.quantile(u) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_special_case_mean() {
        let p = WeibullParams::new(2.0, 1.0, 1.0).unwrap();
        let s = simulate(&p, 200_000, &mut rng(1));
        let mean = s.sorted().iter().sum::<f64>() / s.len() as f64;
        // sd of the mean is 2/sqrt(2e5)
        assert!((mean - 3.0).abs() < 4.0 * 2.0 / (2e5f64).sqrt());
        assert!(s.sorted()[0] > 1.0);
    }

    #[test]
    fn empirical_cdf_matches() {
        let p = WeibullParams::new(2.5, 1.5, 1.0).unwrap();
        let s = simulate(&p, 100_000, &mut rng(2));
        let n = s.len() as f64;
        let ks = s
            .sorted()
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = p.cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "KS distance {ks}");
    }

    #[test]
    fn single_observation_two_spacings() {
        // maximized in F-space where F(x1) = 1/2
        let x = [2.0];
        let (a, b) = (1.0, 1.0);
        let tau = 2.0 - 2f64.ln();
        let v = mps_objective(a, b, tau, &x);
        assert!((v - 2.0 * 0.5f64.ln()).abs() < 1e-12);
        for t in [tau - 0.3, tau + 0.3] {
            assert!(mps_objective(a, b, t, &x) < v);
        }
    }

    #[test]
    fn tied_observations_hit_the_floor() {
        let v = mps_objective(1.0, 1.0, 0.0, &[1.0, 1.0, 2.0]);
        assert!(v < SPACING_FLOOR.ln() + 1.0);
        assert!(v.is_finite());
    }

    #[test]
    fn infeasible_location() {
        assert_eq!(mps_objective(1.0, 1.0, 1.0, &[1.0, 2.0]), f64::NEG_INFINITY);
    }

    fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, m: usize) -> f64 {
        let h = (hi - lo) / m as f64;
        let mut s = f(lo) + f(hi);
        for i in 1..m {
            s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn objective_matches_quadrature() {
        let p = WeibullParams::new(2.5, 2.5, 1.0).unwrap();
        let s = simulate(&p, 20, &mut rng(3));
        let x = s.sorted();
        let mut oracle = 0.0;
        let mut lo = p.tau;
        for &xi in x {
            oracle += simpson(|t| p.pdf(t), lo, xi, 4000).ln();
            lo = xi;
        }
        // upper tail: integrate to far beyond the support's bulk
        oracle += simpson(|t| p.pdf(t), lo, lo + 40.0, 40_000).ln();
        let v = mps_objective(p.a, p.b, p.tau, x);
        assert!((v - oracle).abs() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn shift_invariance() {
        let p = WeibullParams::new(2.5, 1.5, 1.0).unwrap();
        let s = simulate(&p, 20, &mut rng(4));
        let shifted = WeibullSample::new(s.sorted().iter().map(|v| v + 3.0).collect()).unwrap();
        let a = mps_objective(2.0, 1.7, 0.5, s.sorted());
        let b = mps_objective(2.0, 1.7, 3.5, shifted.sorted());
        assert!((a - b).abs() < 1e-9);
        let fa = mps_estimate(&s).unwrap();
        let fb = mps_estimate(&shifted).unwrap();
        assert!((fb.params.tau - fa.params.tau - 3.0).abs() < 1e-5);
    }

    #[test]
    fn estimate_beats_its_starts_and_is_feasible() {
        for seed in 0..20 {
            let p = WeibullParams::new(2.5, 2.5, 1.0).unwrap();
            let s = simulate(&p, 20, &mut rng(100 + seed));
            let fit = mps_estimate(&s).unwrap();
            assert!(fit.params.tau < s.sorted()[0]);
            assert!(fit.value >= mps_objective(2.5, 2.5, 1.0, s.sorted()) - 1e-9);
        }
    }

    /// Coarse-to-fine grid search over `(ln a, ln b, u)`.
    fn nested_grid(x: &[f64]) -> f64 {
        let f = |la: f64, lb: f64, u: f64| mps_objective(la.exp(), lb.exp(), x[0] - u.exp(), x);
        let (mut c, mut w) = ([0.5f64, 0.5, -1.0], [3.0f64, 3.0, 6.0]);
        let mut best = f64::NEG_INFINITY;
        for _ in 0..14 {
            let k = 12;
            let mut arg = c;
            for i in 0..=k {
                for j in 0..=k {
                    for l in 0..=k {
                        let p = [
                            c[0] - w[0] + 2.0 * w[0] * i as f64 / k as f64,
                            c[1] - w[1] + 2.0 * w[1] * j as f64 / k as f64,
                            c[2] - w[2] + 2.0 * w[2] * l as f64 / k as f64,
                        ];
                        let v = f(p[0], p[1], p[2]);
                        if v > best {
                            best = v;
                            arg = p;
                        }
                    }
                }
            }
            c = arg;
            w = [w[0] * 0.5, w[1] * 0.5, w[2] * 0.5];
        }
        best
    }

    #[test]
    fn estimate_matches_nested_grid_oracle() {
        let p = WeibullParams::new(2.5, 2.5, 1.0).unwrap();
        let s = simulate(&p, 20, &mut rng(7));
        let fit = mps_estimate(&s).unwrap();
        let oracle = nested_grid(s.sorted());
        assert!(fit.value >= oracle - 1e-6, "{} vs grid {oracle}", fit.value);
    }

    #[test]
    fn consistent_for_small_shape() {
        let p = WeibullParams::new(2.5, 0.5, 1.0).unwrap();
        let s = simulate(&p, 2000, &mut rng(8));
        let fit = mps_estimate(&s).unwrap();
        assert!((fit.params.tau - 1.0).abs() < 0.05, "{:?}", fit);
    }

    #[test]
    fn half_width_values() {
        let small = neighborhood_half_width(0.5, 20);
        let expected = 4.0 * (-32.0f64).exp() * 20f64.ln() / 20f64.sqrt();
        assert!((small - expected).abs() < 1e-20);
        assert!(small < 1e-13);
        assert!((neighborhood_half_width(2.5, 20) - 2.652).abs() < 1e-3);
        assert!(neighborhood_half_width(2.5, 1_000_000) < neighborhood_half_width(2.5, 1000));
    }

    #[test]
    fn neighborhood_keeps_scale_and_shape_positive() {
        let c = ParamPoint::new(vec![0.5, 2.5, 1.0]).unwrap();
        let r = WeibullModel.neighborhood(&c, 20, 0.0).unwrap();
        assert!(r.lower()[0] > 0.0 && r.lower()[1] > 0.0);
        assert!((r.upper()[2] - 1.0 - neighborhood_half_width(2.5, 20)).abs() < 1e-12);
    }
}
