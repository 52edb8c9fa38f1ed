//! Testing whether every coefficient of a high-dimensional Gaussian linear
//! model is nonnegative, using a lasso / nonnegative-lasso residual ratio.

use loci_core::{Constraint, Error, Model, ParamPoint, Region, Result, StreamRng};
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const CD_TOL: f64 = 1e-8;
pub const CD_MAX_SWEEPS: usize = 10_000;
pub const KKT_TOL: f64 = 1e-6;
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// `(X, y)` with `X` fixed across resamples.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionData {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl RegressionData {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() < 2 {
            return Err(Error::InvalidArgument(format!("need at least two rows, got {}", x.nrows())));
        }
        if y.len() != x.nrows() {
            return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("regression data".into()));
        }
        Ok(Self { x, y })
    }
}

/// `4 sqrt(ln(p) / n)`.
pub fn default_lambda(n: usize, p: usize) -> f64 {
    4.0 * ((p as f64).ln() / n as f64).sqrt()
}

fn gauss(rng: &mut StreamRng) -> f64 {
    StandardNormal.sample(rng)
}

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdFit {
    pub beta: DVector<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Cyclic coordinate descent for `||y - X b||^2 + lambda * sum |b_j|`, with
/// `b >= 0` enforced when `nonnegative` is set.
pub fn coordinate_descent(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, nonnegative: bool) -> Result<CdFit> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
    }
    if y.len() != x.nrows() {
        return Err(Error::DimensionMismatch { expected: x.nrows(), got: y.len() });
    }
    let p = x.ncols();
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared()).collect();
    let half = lambda / 2.0;
    let mut beta: DVector<f64> = DVector::zeros(p);
    let mut r = y.clone();
    for sweep in 1..=CD_MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let col = x.column(j);
            let old: f64 = beta[j];
            let z = col.dot(&r) + norms[j] * old;
            let new = if nonnegative { (z - half).max(0.0) / norms[j] } else { soft(z, half) / norms[j] };
            if new != old {
                r.axpy(old - new, &col, 1.0);
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if max_change < CD_TOL {
            return Ok(CdFit { beta, sweeps: sweep, converged: true });
        }
    }
    Ok(CdFit { beta, sweeps: CD_MAX_SWEEPS, converged: false })
}

pub fn lasso_fit(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    Ok(coordinate_descent(x, y, lambda, false)?.beta)
}

pub fn nnlasso_fit(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    Ok(coordinate_descent(x, y, lambda, true)?.beta)
}

/// `||y - X b||^2 + lambda * sum |b_j|`.
pub fn penalized_objective(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    (y - x * beta).norm_squared() + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// Largest violation of the nonnegative-lasso optimality conditions:
/// `|g_j|` where `b_j > 0`, `max(0, -g_j)` where `b_j = 0`, with
/// `g_j = -2 x_j'(y - X b) + lambda`.
pub fn nnlasso_kkt_violation(x: &DMatrix<f64>, y: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> f64 {
    let r = y - x * beta;
    (0..x.ncols())
        .map(|j| {
            let g = -2.0 * x.column(j).dot(&r) + lambda;
            if beta[j] > 0.0 {
                g.abs()
            } else {
                (-g).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// `||y - X b_H0||^2 / ||y - X b_H1||^2` with the nonnegative lasso under
/// the null and the lasso under the alternative. Equal zero residuals give 1;
/// a zero denominator otherwise gives `+inf`.
pub fn glr_statistic(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<f64> {
    let b0 = nnlasso_fit(x, y, lambda)?;
    let b1 = lasso_fit(x, y, lambda)?;
    let num = (y - x * b0).norm_squared();
    let den = (y - x * b1).norm_squared();
    Ok(if den > 0.0 {
        num / den
    } else if num == 0.0 {
        1.0
    } else {
        f64::INFINITY
    })
}

/// Indices of the nonzero coefficients.
pub fn support(beta: &DVector<f64>) -> Vec<usize> {
    beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(j, _)| j).collect()
}

/// Residual mean square (divisor `n`) of least squares on the columns in
/// `support`, using the least-norm solution when they are rank deficient.
pub fn sigma2_refit(x: &DMatrix<f64>, y: &DVector<f64>, support: &[usize]) -> Result<f64> {
    let n = x.nrows() as f64;
    if support.is_empty() {
        return Ok((y.norm_squared() / n).max(SIGMA2_FLOOR));
    }
    if let Some(&j) = support.iter().find(|&&j| j >= x.ncols()) {
        return Err(Error::InvalidArgument(format!("support index {j} out of range")));
    }
    let xs = x.select_columns(support);
    let svd = xs.clone().svd(true, true);
    let eps = f64::EPSILON * svd.singular_values.max() * x.nrows().max(support.len()) as f64;
    let b = svd.solve(y, eps).map_err(|e| Error::Numerical(e.into()))?;
    Ok(((y - xs * b).norm_squared() / n).max(SIGMA2_FLOOR))
}

/// Gaussian log likelihood of `y` given `X beta` and `sigma2`.
pub fn log_density(x: &DMatrix<f64>, y: &DVector<f64>, beta: &[f64], sigma2: f64) -> f64 {
    if !(sigma2 > 0.0) {
        return f64::NEG_INFINITY;
    }
    let n = y.len() as f64;
    let mut r = y.clone();
    for (j, &b) in beta.iter().enumerate() {
        if b != 0.0 {
            r.axpy(-b, &x.column(j), 1.0);
        }
    }
    -0.5 * n * (2.0 * std::f64::consts::PI * sigma2).ln() - r.norm_squared() / (2.0 * sigma2)
}

/// Rows i.i.d. `N(0, Sigma)` with unit variances and common covariance `rho`.
pub fn design_matrix(n: usize, p: usize, rho: f64, rng: &mut StreamRng) -> Result<DMatrix<f64>> {
    let sigma = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho });
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument(format!("covariance with rho={rho} is not positive definite")))?;
    let z = DMatrix::from_fn(n, p, |_, _| gauss(rng));
    Ok(z * chol.l().transpose())
}

/// Coefficient vectors used in simulations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BetaSpec {
    /// All zero.
    Zero,
    /// The first `count` coefficients equal `value`, the rest zero.
    Leading { count: usize, value: f64 },
    /// `beta_1 = 2`, `beta_2 = c`, the rest zero.
    Power { c: f64 },
}

impl BetaSpec {
    /// Named null configurations `i`..`iv`.
    pub fn named(name: &str) -> Option<Self> {
        match name {
            "i" => Some(Self::Zero),
            "ii" => Some(Self::Leading { count: 1, value: 2.0 }),
            "iii" => Some(Self::Leading { count: 2, value: 2.0 }),
            "iv" => Some(Self::Leading { count: 3, value: 2.0 }),
            _ => None,
        }
    }

    pub fn vector(&self, p: usize) -> Result<Vec<f64>> {
        let mut beta = vec![0.0; p];
        match *self {
            Self::Zero => {}
            Self::Leading { count, value } => {
                if count > p {
                    return Err(Error::InvalidArgument(format!("{count} leading coefficients exceed p={p}")));
                }
                beta[..count].iter_mut().for_each(|b| *b = value);
            }
            Self::Power { c } => {
                if p < 2 {
                    return Err(Error::InvalidArgument("power configuration needs p >= 2".into()));
                }
                beta[0] = 2.0;
                beta[1] = c;
            }
        }
        Ok(beta)
    }
}

/// Model over `(beta_1..beta_p, sigma2)` for a fixed design `X`; the data are
/// the responses `y`.
#[derive(Clone, Debug)]
pub struct HdRegModel {
    x: DMatrix<f64>,
    lambda: f64,
    vary_sigma: bool,
}

impl HdRegModel {
    /// Uses `lambda = 4 sqrt(ln(p)/n)` and lets `sigma2` vary in the neighborhood.
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        let lambda = default_lambda(x.nrows(), x.ncols());
        Self::with_options(x, lambda, true)
    }

    pub fn with_options(x: DMatrix<f64>, lambda: f64, vary_sigma: bool) -> Result<Self> {
        if x.nrows() < 2 || x.ncols() == 0 {
            return Err(Error::InvalidArgument(format!("design matrix {}x{} is too small", x.nrows(), x.ncols())));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix".into()));
        }
        Ok(Self { x, lambda, vary_sigma })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    fn check(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() == self.x.nrows() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.x.nrows(), got: y.len() })
        }
    }
}

impl Model<f64> for HdRegModel {
    type Data = DVector<f64>;

    fn dim(&self) -> usize {
        self.p() + 1
    }

    fn sample_size(&self, y: &DVector<f64>) -> usize {
        y.len()
    }

    /// `y = X beta + sigma * eps`; `n` must equal the number of rows of `X`.
    fn simulate(&self, phi: &[f64], n: usize, rng: &mut StreamRng) -> DVector<f64> {
        assert_eq!(n, self.x.nrows(), "responses are simulated on the fixed design");
        let p = self.p();
        let sd = phi[p].sqrt();
        let mut y = DVector::from_fn(n, |_, _| sd * gauss(rng));
        for (j, &b) in phi[..p].iter().enumerate() {
            if b != 0.0 {
                y.axpy(b, &self.x.column(j), 1.0);
            }
        }
        y
    }

    /// Nonnegative-lasso coefficients and the refitted residual variance.
    fn estimate(&self, y: &DVector<f64>) -> Result<ParamPoint<f64>> {
        self.check(y)?;
        let beta = nnlasso_fit(&self.x, y, self.lambda)?;
        let s2 = sigma2_refit(&self.x, y, &support(&beta))?;
        let mut v: Vec<f64> = beta.iter().copied().collect();
        v.push(s2);
        ParamPoint::new(v)
    }

    /// Zero coefficients frozen at 0, active ones within `delta * sigma_hat`
    /// (kept nonnegative), `sigma2` within `delta` (kept positive) unless fixed.
    fn neighborhood(&self, center: &ParamPoint<f64>, _n: usize, delta: f64) -> Result<Region<f64>> {
        if !(delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        let c = center.coords();
        let p = self.p();
        let s2 = c[p];
        let h = delta * s2.sqrt();
        let mut lower = Vec::with_capacity(p + 1);
        let mut upper = Vec::with_capacity(p + 1);
        for &b in &c[..p] {
            if b == 0.0 {
                lower.push(0.0);
                upper.push(0.0);
            } else {
                lower.push((b - h).max(0.0));
                upper.push(b + h);
            }
        }
        if self.vary_sigma {
            lower.push((s2 - delta).max(SIGMA2_FLOOR));
            upper.push(s2 + delta);
        } else {
            lower.push(s2);
            upper.push(s2);
        }
        Ok(Region::new(lower, upper)?.with_constraint(Constraint::NonnegativeCoords))
    }

    fn statistic(&self, y: &DVector<f64>) -> Result<f64> {
        self.check(y)?;
        glr_statistic(&self.x, y, self.lambda)
    }

    fn log_density(&self, y: &DVector<f64>, phi: &[f64]) -> Result<f64> {
        let p = self.p();
        Ok(log_density(&self.x, y, &phi[..p], phi[p]))
    }

    fn null_constraint(&self) -> Option<Constraint<f64>> {
        Some(Constraint::NonnegativeCoords)
    }

    fn labels(&self) -> Option<Vec<String>> {
        let mut v: Vec<String> = (1..=self.p()).map(|j| format!("beta{j}")).collect();
        v.push("sigma2".into());
        Some(v)
    }
}
