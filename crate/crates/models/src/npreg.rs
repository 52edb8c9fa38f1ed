//! Interval estimation for the minimizer of a regression function observed
//! with Gaussian noise on a fixed design, through its finite-dimensional
//! surrogate `y_i* ~ N(b_i, c^2)` with target `a`.

use std::sync::Arc;

use loci_core::{Error, Model, ParamPoint, Region, Result, StreamRng};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Number of points of the evaluation grid `{0, 1/1000, ..., 1}`.
pub const EVAL_GRID_POINTS: usize = 1001;
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// `0.75 (1 - u^2)` on `|u| <= 1`.
pub fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// `x_i = (2i - 1) / (2n)`, `i = 1..n`.
pub fn design_points(n: usize) -> Vec<f64> {
    (1..=n).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect()
}

/// `n^(-1/5) / 5`.
pub fn default_bandwidth(n: usize) -> f64 {
    (n as f64).powf(-0.2) / 5.0
}

/// Nadaraya–Watson estimate at `x`. When no design point has positive
/// kernel weight the response at the nearest design point is returned and
/// the flag is set.
pub fn nw_estimate(x: f64, xs: &[f64], ys: &[f64], h: f64) -> (f64, bool) {
    let mut num = 0.0;
    let mut den = 0.0;
    for (&xi, &yi) in xs.iter().zip(ys) {
        let w = epanechnikov((x - xi) / h);
        num += w * yi;
        den += w;
    }
    if den > 0.0 {
        (num / den, false)
    } else {
        (ys[nearest(x, xs)], true)
    }
}

fn nearest(x: f64, xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &xi) in xs.iter().enumerate() {
        if (x - xi).abs() < (x - xs[best]).abs() {
            best = i;
        }
    }
    best
}

/// Normalized kernel weights `(index, weight)` at one evaluation point.
type Row = Vec<(usize, f64)>;

fn weight_row(x: f64, xs: &[f64], h: f64) -> (Row, bool) {
    let raw: Row =
        xs.iter().enumerate().map(|(i, &xi)| (i, epanechnikov((x - xi) / h))).filter(|(_, w)| *w > 0.0).collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    if total > 0.0 {
        (raw.into_iter().map(|(i, w)| (i, w / total)).collect(), false)
    } else {
        (vec![(nearest(x, xs), 1.0)], true)
    }
}

fn apply(row: &Row, ys: &[f64]) -> f64 {
    row.iter().map(|&(i, w)| w * ys[i]).sum()
}

/// Smoother with the kernel weights precomputed on the evaluation grid and
/// at the design points.
#[derive(Clone, Debug)]
pub struct NwSmoother {
    xs: Vec<f64>,
    h: f64,
    grid: Vec<Row>,
    at_design: Vec<Row>,
    fallback_points: usize,
}

impl NwSmoother {
    pub fn new(xs: Vec<f64>, h: f64) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Empty("design points"));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) || xs.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidArgument("design points must increase strictly within [0, 1]".into()));
        }
        let mut fallback_points = 0;
        let mut row = |x: f64| {
            let (r, fell_back) = weight_row(x, &xs, h);
            fallback_points += usize::from(fell_back);
            r
        };
        let grid: Vec<Row> = (0..EVAL_GRID_POINTS).map(|k| row(grid_point(k))).collect();
        let at_design: Vec<Row> = xs.clone().into_iter().map(&mut row).collect();
        Ok(Self { xs, h, grid, at_design, fallback_points })
    }

    /// Fixed design `x_i = (2i-1)/(2n)` with bandwidth `n^(-1/5)/5`.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(design_points(n), default_bandwidth(n))
    }

    pub fn design(&self) -> &[f64] {
        &self.xs
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Evaluation points (grid or design) whose kernel window was empty.
    pub fn fallback_points(&self) -> usize {
        self.fallback_points
    }

    /// Grid minimizer of the smoothed curve; ties go to the smallest `x`.
    pub fn argmin(&self, ys: &[f64]) -> f64 {
        let mut best = (0, f64::INFINITY);
        for (k, row) in self.grid.iter().enumerate() {
            let v = apply(row, ys);
            if v < best.1 {
                best = (k, v);
            }
        }
        grid_point(best.0)
    }

    pub fn fitted(&self, ys: &[f64]) -> Vec<f64> {
        self.at_design.iter().map(|row| apply(row, ys)).collect()
    }

    /// `(1/n) sum (y_i - r_hat(x_i))^2`, floored.
    pub fn sigma2(&self, ys: &[f64]) -> f64 {
        let fit = self.fitted(ys);
        let rss: f64 = ys.iter().zip(&fit).map(|(y, f)| (y - f).powi(2)).sum();
        (rss / ys.len() as f64).max(SIGMA2_FLOOR)
    }
}

fn grid_point(k: usize) -> f64 {
    k as f64 / (EVAL_GRID_POINTS - 1) as f64
}

/// Test functions on `[0, 1]` with a unique minimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegressionFunction {
    /// `2 (2x - 1)^2`
    I,
    /// `2 / (x + 1)`
    II,
    /// `sin(2 pi x + 3 pi / 4) / 2`
    III,
    /// `|x - 1/2|`
    IV,
}

impl RegressionFunction {
    pub fn eval(self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            Self::I => 2.0 * (2.0 * x - 1.0).powi(2),
            Self::II => 2.0 / (x + 1.0),
            Self::III => (2.0 * PI * x + 0.75 * PI).sin() / 2.0,
            Self::IV => (x - 0.5).abs(),
        }
    }

    pub fn minimizer(self) -> f64 {
        match self {
            Self::I | Self::IV => 0.5,
            Self::II => 1.0,
            Self::III => 0.375,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "I" | "1" => Some(Self::I),
            "II" | "2" => Some(Self::II),
            "III" | "3" => Some(Self::III),
            "IV" | "4" => Some(Self::IV),
            _ => None,
        }
    }
}

/// Surrogate model over `(a, b_1..b_n, c)`: responses `N(b_i, c^2)`,
/// target `a`, estimate `(xi_hat, r_hat(x_1)..r_hat(x_n), sigma_hat)`.
#[derive(Clone, Debug)]
pub struct NpRegModel {
    smoother: Arc<NwSmoother>,
}

impl NpRegModel {
    pub fn new(smoother: NwSmoother) -> Self {
        Self { smoother: Arc::new(smoother) }
    }

    pub fn standard(n: usize) -> Result<Self> {
        Ok(Self::new(NwSmoother::standard(n)?))
    }

    pub fn smoother(&self) -> &NwSmoother {
        &self.smoother
    }

    /// `(xi(r), r(x_1)..r(x_n), sigma)`.
    pub fn truth(&self, f: RegressionFunction, sigma: f64) -> Vec<f64> {
        let mut v = vec![f.minimizer()];
        v.extend(self.smoother.design().iter().map(|&x| f.eval(x)));
        v.push(sigma);
        v
    }

    /// Data from the regression model itself, drawing the same normals in
    /// the same order as the surrogate at [`NpRegModel::truth`].
    pub fn simulate_true(&self, f: RegressionFunction, sigma: f64, rng: &mut StreamRng) -> Vec<f64> {
        self.smoother
            .design()
            .iter()
            .map(|&x| {
                let z: f64 = StandardNormal.sample(rng);
                f.eval(x) + sigma * z
            })
            .collect()
    }

    fn check(&self, ys: &[f64]) -> Result<()> {
        if ys.len() != self.smoother.len() {
            return Err(Error::DimensionMismatch { expected: self.smoother.len(), got: ys.len() });
        }
        if ys.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("response".into()));
        }
        Ok(())
    }
}

impl Model<f64> for NpRegModel {
    type Data = Vec<f64>;

    fn dim(&self) -> usize {
        self.smoother.len() + 2
    }

    fn sample_size(&self, ys: &Vec<f64>) -> usize {
        ys.len()
    }

    fn simulate(&self, phi: &[f64], _n: usize, rng: &mut StreamRng) -> Vec<f64> {
        let n = phi.len() - 2;
        let c = phi[n + 1];
        phi[1..=n]
            .iter()
            .map(|&b| {
                let z: f64 = StandardNormal.sample(rng);
                b + c * z
            })
            .collect()
    }

    fn estimate(&self, ys: &Vec<f64>) -> Result<ParamPoint<f64>> {
        self.check(ys)?;
        let mut v = vec![self.smoother.argmin(ys)];
        v.extend(self.smoother.fitted(ys));
        v.push(self.smoother.sigma2(ys).sqrt());
        ParamPoint::new(v)
    }

    /// `xi` and every `b_i` within `delta * sigma_hat` (`xi` kept in `[0,1]`),
    /// `c` within `delta` (kept positive).
    fn neighborhood(&self, center: &ParamPoint<f64>, _n: usize, delta: f64) -> Result<Region<f64>> {
        let n = self.smoother.len();
        if center.dim() != n + 2 {
            return Err(Error::DimensionMismatch { expected: n + 2, got: center.dim() });
        }
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let c = center.coords();
        let s = c[n + 1];
        let h = delta * s;
        let mut lower: Vec<f64> = c.iter().map(|v| v - h).collect();
        let mut upper: Vec<f64> = c.iter().map(|v| v + h).collect();
        lower[0] = lower[0].max(0.0);
        upper[0] = upper[0].min(1.0);
        lower[n + 1] = (s - delta).max(SIGMA2_FLOOR.sqrt());
        upper[n + 1] = s + delta;
        Region::new(lower, upper)
    }

    fn target(&self, phi: &[f64]) -> Result<f64> {
        Ok(phi[0])
    }

    fn target_estimate(&self, ys: &Vec<f64>) -> Result<f64> {
        Ok(self.smoother.argmin(ys))
    }

    fn labels(&self) -> Option<Vec<String>> {
        let mut v = vec!["xi".to_string()];
        v.extend((1..=self.smoother.len()).map(|i| format!("r{i}")));
        v.push("sigma".into());
        Some(v)
    }
}
