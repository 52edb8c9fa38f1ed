//! Parameter-space geometry: points, box neighborhoods with optional
//! membership constraints, and space-filling try-point designs.
//!
//! A unit design lives in `[0,1]^q` and is mapped affinely onto the box
//! `[L_1,U_1] x ... x [L_q,U_q]`. Constrained regions are handled by mapping
//! and then keeping the feasible points.

use std::io::Write;
use std::ops::Index;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::streams::{mix, StreamRng};

/// Tolerance for equality constraints such as sum-to-one.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Default cap on the number of points in a full factorial grid.
pub const DEFAULT_GRID_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParamPoint<T> {
    coords: Vec<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl<T: Real> ParamPoint<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Empty("parameter point coordinates"));
        }
        if let Some(j) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("coordinate {j} is {}", coords[j])));
        }
        Ok(Self { coords, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.coords.len() {
            return Err(Error::DimensionMismatch { expected: self.coords.len(), got: labels.len() });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }

    /// Largest absolute coordinate difference.
    pub fn sup_distance(&self, other: &[T]) -> T {
        self.coords.iter().zip(other).fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }
}

impl<T> Index<usize> for ParamPoint<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.coords[i]
    }
}

/// Named membership predicate attached to a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Constraint<T> {
    /// Coordinates are nonnegative and sum to one.
    SimplexSumToOne,
    NonnegativeCoords,
    FixedCoords {
        indices: Vec<usize>,
        values: Vec<T>,
    },
    /// `x[index] <= bound`.
    AtMost {
        index: usize,
        bound: T,
    },
    /// `x[index] >= bound`.
    AtLeast {
        index: usize,
        bound: T,
    },
    All(Vec<Constraint<T>>),
}

impl<T: Real> Constraint<T> {
    pub fn contains(&self, x: &[T]) -> bool {
        let tol = T::lit(MEMBERSHIP_TOL);
        match self {
            Constraint::SimplexSumToOne => {
                let s: T = x.iter().copied().sum();
                (s - T::one()).abs() <= tol && x.iter().all(|&v| v >= T::zero())
            }
            Constraint::NonnegativeCoords => x.iter().all(|&v| v >= T::zero()),
            Constraint::FixedCoords { indices, values } => {
                indices.iter().zip(values).all(|(&i, &v)| i < x.len() && (x[i] - v).abs() <= tol)
            }
            Constraint::AtMost { index, bound } => *index < x.len() && x[*index] <= *bound,
            Constraint::AtLeast { index, bound } => *index < x.len() && x[*index] >= *bound,
            Constraint::All(cs) => cs.iter().all(|c| c.contains(x)),
        }
    }

    /// Coordinate determined by the others, if any (the last one, for the simplex).
    pub fn dependent_coord(&self, dim: usize) -> Option<usize> {
        match self {
            Constraint::SimplexSumToOne => dim.checked_sub(1),
            Constraint::All(cs) => cs.iter().find_map(|c| c.dependent_coord(dim)),
            _ => None,
        }
    }

    /// Euclidean projection of `x` onto the constraint set intersected with
    /// the box `[lower, upper]`; `None` when that intersection is empty.
    pub fn project(&self, x: &[T], lower: &[T], upper: &[T]) -> Option<Vec<T>> {
        let mut lo = lower.to_vec();
        let mut hi = upper.to_vec();
        if !self.tighten(&mut lo, &mut hi) {
            return None;
        }
        let y = if self.has_simplex() {
            project_box_hyperplane(x, &lo, &hi)?
        } else {
            x.iter().zip(lo.iter().zip(&hi)).map(|(&v, (&l, &u))| v.max(l).min(u)).collect()
        };
        self.contains(&y).then_some(y)
    }

    fn has_simplex(&self) -> bool {
        match self {
            Constraint::SimplexSumToOne => true,
            Constraint::All(cs) => cs.iter().any(|c| c.has_simplex()),
            _ => false,
        }
    }

    /// Folds coordinate-wise bounds into the box. Returns false if it empties.
    fn tighten(&self, lo: &mut [T], hi: &mut [T]) -> bool {
        match self {
            Constraint::SimplexSumToOne | Constraint::NonnegativeCoords => {
                lo.iter_mut().for_each(|l| *l = l.max(T::zero()));
            }
            Constraint::FixedCoords { indices, values } => {
                for (&i, &v) in indices.iter().zip(values) {
                    if i >= lo.len() {
                        return false;
                    }
                    lo[i] = lo[i].max(v);
                    hi[i] = hi[i].min(v);
                }
            }
            Constraint::AtMost { index, bound } => {
                if *index >= hi.len() {
                    return false;
                }
                hi[*index] = hi[*index].min(*bound);
            }
            Constraint::AtLeast { index, bound } => {
                if *index >= lo.len() {
                    return false;
                }
                lo[*index] = lo[*index].max(*bound);
            }
            Constraint::All(cs) => {
                if !cs.iter().all(|c| c.tighten(lo, hi)) {
                    return false;
                }
            }
        }
        lo.iter().zip(hi.iter()).all(|(l, h)| l <= h)
    }
}

/// Projection onto `{y : lo <= y <= hi, sum(y) = 1}` by bisection on the
/// shift `s` in `y_i = clamp(x_i - s, lo_i, hi_i)`.
fn project_box_hyperplane<T: Real>(x: &[T], lo: &[T], hi: &[T]) -> Option<Vec<T>> {
    let one = T::one();
    let sum_lo: T = lo.iter().copied().sum();
    let sum_hi: T = hi.iter().copied().sum();
    let tol = T::lit(MEMBERSHIP_TOL);
    if sum_lo > one + tol || sum_hi < one - tol {
        return None;
    }
    let clamp =
        |s: T| -> Vec<T> { x.iter().zip(lo.iter().zip(hi)).map(|(&v, (&l, &u))| (v - s).max(l).min(u)).collect() };
    let total = |s: T| -> T { clamp(s).into_iter().sum() };
    // total(s) is nonincreasing in s
    let spread = x.iter().chain(lo).chain(hi).fold(T::zero(), |m, v| m.max(v.abs())) + one;
    let (mut a, mut b) = (-spread * T::lit(4.0), spread * T::lit(4.0));
    for _ in 0..200 {
        let mid = (a + b) / T::lit(2.0);
        if total(mid) > one {
            a = mid;
        } else {
            b = mid;
        }
    }
    let mut y = clamp((a + b) / T::lit(2.0));
    // absorb the residual in the coordinate with the most slack
    let resid = one - y.iter().copied().sum::<T>();
    if let Some(j) = (0..y.len()).max_by(|&i, &j| {
        let si = (hi[i] - y[i]).min(y[i] - lo[i]);
        let sj = (hi[j] - y[j]).min(y[j] - lo[j]);
        si.partial_cmp(&sj).unwrap_or(std::cmp::Ordering::Equal)
    }) {
        y[j] += resid;
    }
    Some(y)
}

/// Axis-aligned box plus an optional membership constraint.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region<T> {
    lower: Vec<T>,
    upper: Vec<T>,
    constraint: Option<Constraint<T>>,
}

impl<T: Real> Region<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.is_empty() {
            return Err(Error::Empty("region bounds"));
        }
        for (j, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() || l > u {
                return Err(Error::InvalidArgument(format!("bad interval [{l}, {u}] in coordinate {j}")));
            }
        }
        Ok(Self { lower, upper, constraint: None })
    }

    /// The cube `[c_j - h, c_j + h]` around `center`.
    pub fn cube(center: &[T], half_width: T) -> Result<Self> {
        Self::new(center.iter().map(|&c| c - half_width).collect(), center.iter().map(|&c| c + half_width).collect())
    }

    /// Adds `c` to the membership predicate (intersecting with any existing one).
    pub fn with_constraint(mut self, c: Constraint<T>) -> Self {
        self.constraint = Some(match self.constraint.take() {
            None => c,
            Some(Constraint::All(mut cs)) => {
                cs.push(c);
                Constraint::All(cs)
            }
            Some(prev) => Constraint::All(vec![prev, c]),
        });
        self
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn constraint(&self) -> Option<&Constraint<T>> {
        self.constraint.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn in_box(&self, x: &[T]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| v >= l && v <= u)
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.in_box(x) && self.constraint.as_ref().is_none_or(|c| c.contains(x))
    }

    pub fn clip(&self, x: &mut [T]) {
        for (v, (&l, &u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.max(l).min(u);
        }
    }

    /// Coordinates with positive width.
    pub fn free_dims(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.upper[j] > self.lower[j]).collect()
    }

    /// Coordinates a unit design has to span: the free ones, minus any
    /// coordinate fixed by an equality constraint.
    pub fn design_dims(&self) -> Vec<usize> {
        let dep = self.constraint.as_ref().and_then(|c| c.dependent_coord(self.dim()));
        self.free_dims().into_iter().filter(|&j| Some(j) != dep).collect()
    }

    /// Nearest member of the region, if any.
    pub fn project(&self, x: &[T]) -> Option<Vec<T>> {
        match &self.constraint {
            None => {
                let mut y = x.to_vec();
                self.clip(&mut y);
                Some(y)
            }
            Some(c) => c.project(x, &self.lower, &self.upper).filter(|y| self.contains(y)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    Grid,
    LatinHypercube,
}

/// Initial design in `[0,1]^q`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnitDesign<T> {
    points: Vec<Vec<T>>,
    dim: usize,
    kind: DesignKind,
}

impl<T: Real> UnitDesign<T> {
    /// A design with no points (the try design then reduces to the center).
    pub fn empty(dim: usize) -> Self {
        Self { points: Vec::new(), dim, kind: DesignKind::Grid }
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// One row per point; `labels` defaults to `u1..uq`.
    pub fn write_csv<W: Write>(&self, out: W, labels: Option<&[String]>) -> Result<()> {
        let header: Vec<String> = match labels {
            Some(l) if l.len() == self.dim => l.to_vec(),
            Some(l) => return Err(Error::DimensionMismatch { expected: self.dim, got: l.len() }),
            None => (1..=self.dim).map(|j| format!("u{j}")).collect(),
        };
        write_rows(out, &header, self.points.iter().map(|p| p.as_slice()))
    }
}

fn write_rows<'a, T: Real, W: Write>(out: W, header: &[String], rows: impl Iterator<Item = &'a [T]>) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv write failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv flush failed: {e}")))
}

/// Full factorial grid `{1/(2U), 3/(2U), ..., (2U-1)/(2U)}^q`, lexicographic.
pub fn grid_design<T: Real>(levels: usize, q: usize) -> Result<UnitDesign<T>> {
    grid_design_capped(levels, q, DEFAULT_GRID_CAP)
}

pub fn grid_design_capped<T: Real>(levels: usize, q: usize, cap: usize) -> Result<UnitDesign<T>> {
    if levels == 0 || q == 0 {
        return Err(Error::InvalidArgument(format!("grid needs U >= 1 and q >= 1 (got U={levels}, q={q})")));
    }
    let total = (levels as u128).checked_pow(q as u32).unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(Error::SizeLimit { points: total, cap });
    }
    let two_u = T::from_count(2 * levels);
    let level: Vec<T> = (0..levels).map(|i| T::from_count(2 * i + 1) / two_u).collect();
    let mut points = Vec::with_capacity(total as usize);
    let mut idx = vec![0usize; q];
    loop {
        points.push(idx.iter().map(|&i| level[i]).collect());
        // odometer, last coordinate fastest
        let mut j = q;
        loop {
            if j == 0 {
                return Ok(UnitDesign { points, dim: q, kind: DesignKind::Grid });
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < levels {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// Midpoint Latin hypercube: column `j` is a random permutation of the
/// stratum midpoints `(2i-1)/(2L)`. Deterministic in `seed`.
pub fn lhd_design<T: Real>(runs: usize, q: usize, seed: u64) -> Result<UnitDesign<T>> {
    if runs == 0 || q == 0 {
        return Err(Error::InvalidArgument(format!("LHD needs L >= 1 and q >= 1 (got L={runs}, q={q})")));
    }
    let two_l = T::from_count(2 * runs);
    let mut points = vec![vec![T::zero(); q]; runs];
    for j in 0..q {
        let mut rng = StreamRng::seed_from_u64(mix(seed, j as u64));
        let mut perm: Vec<usize> = (0..runs).collect();
        perm.shuffle(&mut rng);
        for (row, &s) in points.iter_mut().zip(&perm) {
            row[j] = T::from_count(2 * s + 1) / two_l;
        }
    }
    Ok(UnitDesign { points, dim: q, kind: DesignKind::LatinHypercube })
}

/// Affine image `phi_ij = L_j + psi_ij (U_j - L_j)`; the constraint is not applied.
pub fn map_to_region<T: Real>(design: &UnitDesign<T>, region: &Region<T>) -> Result<Vec<ParamPoint<T>>> {
    if design.dim() != region.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), got: design.dim() });
    }
    design
        .points()
        .iter()
        .map(|psi| {
            let coords =
                psi.iter().zip(region.lower.iter().zip(&region.upper)).map(|(&p, (&l, &u))| l + p * (u - l)).collect();
            ParamPoint::new(coords)
        })
        .collect()
}

/// Maps a design spanning `region.design_dims()` into the full space:
/// degenerate coordinates stay at their single value and a dependent
/// simplex coordinate is set to one minus the others.
pub fn lift_to_region<T: Real>(design: &UnitDesign<T>, region: &Region<T>) -> Result<Vec<ParamPoint<T>>> {
    let dims = region.design_dims();
    if design.dim() != dims.len() {
        return Err(Error::DimensionMismatch { expected: dims.len(), got: design.dim() });
    }
    let dep = region.constraint().and_then(|c| c.dependent_coord(region.dim()));
    design
        .points()
        .iter()
        .map(|psi| {
            let mut x = region.lower.clone();
            for (&p, &j) in psi.iter().zip(&dims) {
                x[j] = region.lower[j] + p * (region.upper[j] - region.lower[j]);
            }
            if let Some(d) = dep {
                let others: T = x.iter().enumerate().filter(|&(j, _)| j != d).map(|(_, &v)| v).sum();
                x[d] = T::one() - others;
            }
            ParamPoint::new(x)
        })
        .collect()
}

/// Keeps the members of `region`, preserving order.
pub fn filter_feasible<T: Real>(points: Vec<ParamPoint<T>>, region: &Region<T>) -> Vec<ParamPoint<T>> {
    points.into_iter().filter(|p| region.contains(p.coords())).collect()
}

/// Ordered try points; `points[0]` is the (feasible) center.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TryDesign<T> {
    points: Vec<ParamPoint<T>>,
    center_projected: bool,
}

impl<T: Real> TryDesign<T> {
    pub fn center_only(center: ParamPoint<T>) -> Self {
        Self { points: vec![center], center_projected: false }
    }

    /// Wraps an explicit list of try points; the first one acts as the center.
    pub fn from_points(points: Vec<ParamPoint<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("try design"));
        }
        let d = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
        Ok(Self { points, center_projected: false })
    }

    pub fn points(&self) -> &[ParamPoint<T>] {
        &self.points
    }

    pub fn center(&self) -> &ParamPoint<T> {
        &self.points[0]
    }

    pub const fn center_index(&self) -> usize {
        0
    }

    /// True when the estimate violated the constraint and was projected.
    pub fn center_projected(&self) -> bool {
        self.center_projected
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: ParamPoint<T>) -> Result<()> {
        if p.dim() != self.center().dim() {
            return Err(Error::DimensionMismatch { expected: self.center().dim(), got: p.dim() });
        }
        self.points.push(p);
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let c = self.center();
        let header: Vec<String> = match c.labels() {
            Some(l) => l.to_vec(),
            None => (1..=c.dim()).map(|j| format!("x{j}")).collect(),
        };
        write_rows(out, &header, self.points.iter().map(|p| p.coords()))
    }
}

/// `[feasible center] ++ feasible(mapped design)`, with copies of the center dropped.
///
/// `design` may span either every coordinate of the region or only
/// [`Region::design_dims`]; the latter is how degenerate and simplex
/// coordinates are handled.
pub fn build_try_design<T: Real>(
    center: &ParamPoint<T>,
    region: &Region<T>,
    design: &UnitDesign<T>,
) -> Result<TryDesign<T>> {
    if center.dim() != region.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), got: center.dim() });
    }
    if !region.in_box(center.coords()) {
        return Err(Error::InvalidArgument("center lies outside the region box".into()));
    }
    let (c, projected) = if region.contains(center.coords()) {
        (center.clone(), false)
    } else {
        let y = region
            .project(center.coords())
            .ok_or_else(|| Error::Infeasible("region box does not meet the constraint set".into()))?;
        let mut p = ParamPoint::new(y)?;
        if let Some(l) = center.labels() {
            p = p.with_labels(l.to_vec())?;
        }
        (p, true)
    };
    let mapped = if design.is_empty() {
        Vec::new()
    } else if design.dim() == region.dim() {
        map_to_region(design, region)?
    } else {
        lift_to_region(design, region)?
    };
    let same_tol = T::lit(1e-12);
    let mut points = vec![c];
    for p in filter_feasible(mapped, region) {
        if points[0].sup_distance(p.coords()) > same_tol {
            points.push(match center.labels() {
                Some(l) => p.with_labels(l.to_vec())?,
                None => p,
            });
        }
    }
    Ok(TryDesign { points, center_projected: projected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pt(v: &[f64]) -> ParamPoint<f64> {
        ParamPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn point_invariants() {
        assert!(ParamPoint::<f64>::new(vec![]).is_err());
        assert!(ParamPoint::new(vec![1.0, f64::NAN]).is_err());
        assert!(pt(&[1.0, 2.0]).with_labels(vec!["a".into()]).is_err());
        let p = pt(&[1.0, 2.0]).with_labels(vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(p.labels().unwrap()[1], "b");
    }

    #[test]
    fn region_rejects_inverted_interval() {
        assert!(Region::new(vec![1.0], vec![0.0]).is_err());
        assert!(Region::new(vec![0.0, 0.0], vec![1.0]).is_err());
    }

    #[test]
    fn grid_single_midpoint() {
        let g = grid_design::<f64>(1, 2).unwrap();
        assert_eq!(g.points(), &[vec![0.5, 0.5]]);
    }

    #[test]
    fn grid_one_dimensional_levels() {
        let g = grid_design::<f64>(5, 1).unwrap();
        let got: Vec<f64> = g.points().iter().map(|p| p[0]).collect();
        for (a, b) in got.iter().zip([0.1, 0.3, 0.5, 0.7, 0.9]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn grid_three_levels_in_three_dims() {
        let g = grid_design::<f64>(3, 3).unwrap();
        assert_eq!(g.len(), 27);
        let levels = [1.0 / 6.0, 0.5, 5.0 / 6.0];
        for p in g.points() {
            assert!(p.iter().all(|v| levels.iter().any(|l| (v - l).abs() < 1e-15)));
        }
        // lexicographic
        assert_eq!(g.points()[1], vec![1.0 / 6.0, 1.0 / 6.0, 0.5]);
    }

    #[test]
    fn grid_cap_is_enforced() {
        match grid_design_capped::<f64>(10, 7, 1000) {
            Err(Error::SizeLimit { points, .. }) => assert_eq!(points, 10_000_000),
            other => panic!("expected size limit, got {other:?}"),
        }
    }

    #[test]
    fn lhd_single_run_is_center() {
        let d = lhd_design::<f64>(1, 3, 99).unwrap();
        assert_eq!(d.points(), &[vec![0.5, 0.5, 0.5]]);
    }

    #[test]
    fn lhd_four_runs_use_midpoints() {
        let d = lhd_design::<f64>(4, 2, 5).unwrap();
        for j in 0..2 {
            let mut col: Vec<f64> = d.points().iter().map(|p| p[j]).collect();
            col.sort_by(f64::total_cmp);
            assert_eq!(col, vec![0.125, 0.375, 0.625, 0.875]);
        }
    }

    #[test]
    fn lhd_stratum_occupancy_thirty_by_seven() {
        let d = lhd_design::<f64>(30, 7, 11).unwrap();
        for j in 0..7 {
            let mut col: Vec<f64> = d.points().iter().map(|p| p[j]).collect();
            col.sort_by(f64::total_cmp);
            for (i, v) in col.iter().enumerate() {
                assert_abs_diff_eq!(*v, (2 * i + 1) as f64 / 60.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn lhd_is_deterministic_in_seed() {
        let a = lhd_design::<f64>(12, 4, 3).unwrap();
        assert_eq!(a, lhd_design::<f64>(12, 4, 3).unwrap());
        assert_ne!(a, lhd_design::<f64>(12, 4, 4).unwrap());
    }

    #[test]
    fn map_midpoint_and_corners() {
        let r = Region::new(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
        let d = UnitDesign { points: vec![vec![0.5, 0.5], vec![0.0, 1.0]], dim: 2, kind: DesignKind::Grid };
        let m = map_to_region(&d, &r).unwrap();
        assert_eq!(m[0].coords(), &[1.0, 0.0]);
        assert_eq!(m[1].coords(), &[0.0, 1.0]);
        let bad = UnitDesign::<f64> { points: vec![vec![0.5]], dim: 1, kind: DesignKind::Grid };
        assert!(matches!(map_to_region(&bad, &r), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn grid_mapped_to_unit_square() {
        let r = Region::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let m = map_to_region(&grid_design::<f64>(3, 2).unwrap(), &r).unwrap();
        let levels = [1.0 / 6.0, 0.5, 5.0 / 6.0];
        let mut k = 0;
        for a in levels {
            for b in levels {
                assert_abs_diff_eq!(m[k][0], a, epsilon = 1e-15);
                assert_abs_diff_eq!(m[k][1], b, epsilon = 1e-15);
                k += 1;
            }
        }
    }

    #[test]
    fn filter_keeps_everything_without_constraint() {
        let r = Region::new(vec![0.0], vec![1.0]).unwrap();
        let pts = vec![pt(&[0.2]), pt(&[0.9])];
        assert_eq!(filter_feasible(pts.clone(), &r), pts);
    }

    #[test]
    fn simplex_excludes_off_plane_point() {
        let r = Region::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap().with_constraint(Constraint::SimplexSumToOne);
        assert!(filter_feasible(vec![pt(&[0.5, 0.6])], &r).is_empty());
        assert_eq!(filter_feasible(vec![pt(&[0.4, 0.6])], &r).len(), 1);
    }

    #[test]
    fn simplex_grid_over_five_dims_keeps_sum_to_one_points() {
        let c = [0.3, 0.175, 0.175, 0.175, 0.175];
        let r = Region::cube(&c, 0.06).unwrap().with_constraint(Constraint::SimplexSumToOne);
        // full-dimension grid: enumerate and re-check sums independently
        let full = map_to_region(&grid_design::<f64>(3, 5).unwrap(), &r).unwrap();
        let kept = filter_feasible(full.clone(), &r);
        let expected = full.iter().filter(|p| (p.coords().iter().sum::<f64>() - 1.0).abs() <= 1e-10).count();
        assert_eq!(kept.len(), expected);
        // lifted grid over the first four coordinates
        let td = build_try_design(&pt(&c), &r, &grid_design::<f64>(3, 4).unwrap()).unwrap();
        assert!(td.len() > 1);
        for p in td.points() {
            assert_abs_diff_eq!(p.coords().iter().sum::<f64>(), 1.0, epsilon = 1e-10);
            assert!(r.contains(p.coords()));
        }
    }

    #[test]
    fn empty_design_gives_center_only() {
        let r = Region::new(vec![0.0], vec![1.0]).unwrap();
        let td = build_try_design(&pt(&[0.5]), &r, &UnitDesign::empty(1)).unwrap();
        assert_eq!(td.points(), &[pt(&[0.5])]);
    }

    #[test]
    fn unconstrained_three_dim_grid_gives_twenty_eight_points() {
        let r = Region::cube(&[2.5, 2.5, 1.0], 0.5).unwrap();
        let td = build_try_design(&pt(&[2.5, 2.5, 1.0]), &r, &grid_design::<f64>(3, 3).unwrap()).unwrap();
        // the middle grid point coincides with the center and is dropped
        assert_eq!(td.len(), 27);
        let r = Region::new(vec![2.0, 2.0, 0.5], vec![3.2, 3.2, 1.7]).unwrap();
        let td = build_try_design(&pt(&[2.5, 2.5, 1.0]), &r, &grid_design::<f64>(3, 3).unwrap()).unwrap();
        assert_eq!(td.len(), 28);
    }

    #[test]
    fn infeasible_center_is_projected() {
        let r = Region::new(vec![0.3, 0.3], vec![0.8, 0.8]).unwrap().with_constraint(Constraint::SimplexSumToOne);
        let td = build_try_design(&pt(&[0.7, 0.6]), &r, &UnitDesign::empty(1)).unwrap();
        assert!(td.center_projected());
        assert_abs_diff_eq!(td.center()[0], 0.55, epsilon = 1e-9);
        assert_abs_diff_eq!(td.center()[1], 0.45, epsilon = 1e-9);

        let r = Region::new(vec![0.2], vec![0.9]).unwrap().with_constraint(Constraint::AtMost { index: 0, bound: 0.5 });
        let td = build_try_design(&pt(&[0.7]), &r, &UnitDesign::empty(1)).unwrap();
        assert_eq!(td.center().coords(), &[0.5]);
    }

    #[test]
    fn empty_intersection_is_infeasible() {
        let r = Region::new(vec![0.6], vec![0.9]).unwrap().with_constraint(Constraint::AtMost { index: 0, bound: 0.5 });
        assert!(matches!(build_try_design(&pt(&[0.7]), &r, &UnitDesign::empty(1)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn degenerate_coordinates_are_skipped_by_lift() {
        let r = Region::new(vec![0.0, 1.0, 0.0], vec![0.0, 2.0, 0.5]).unwrap();
        assert_eq!(r.design_dims(), vec![1, 2]);
        let td = build_try_design(&pt(&[0.0, 1.5, 0.25]), &r, &lhd_design::<f64>(5, 2, 1).unwrap()).unwrap();
        assert!(td.points().iter().all(|p| p[0] == 0.0 && r.contains(p.coords())));
    }

    #[test]
    fn csv_output_has_header_and_rows() {
        let mut buf = Vec::new();
        grid_design::<f64>(2, 2).unwrap().write_csv(&mut buf, None).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next(), Some("u1,u2"));
        assert_eq!(s.lines().count(), 5);
    }

    #[test]
    fn works_in_single_precision() {
        let g = grid_design::<f32>(4, 2).unwrap();
        let r = Region::<f32>::new(vec![0.0, 0.0], vec![2.0, 2.0]).unwrap();
        let m = map_to_region(&g, &r).unwrap();
        assert_eq!(m[0].coords(), &[0.25f32, 0.25]);
    }

    proptest! {
        #[test]
        fn grid_size_and_levels(u in 1usize..6, q in 1usize..4) {
            let g = grid_design::<f64>(u, q).unwrap();
            prop_assert_eq!(g.len(), u.pow(q as u32));
            for p in g.points() {
                for v in p {
                    let i = (v * (2 * u) as f64 + 1.0) / 2.0;
                    prop_assert!((i - i.round()).abs() < 1e-9);
                }
            }
        }

        #[test]
        fn lhd_one_per_stratum(l in 1usize..40, q in 1usize..6, seed in any::<u64>()) {
            let d = lhd_design::<f64>(l, q, seed).unwrap();
            for j in 0..q {
                let mut strata: Vec<usize> = d.points().iter().map(|p| (p[j] * l as f64).floor() as usize).collect();
                strata.sort_unstable();
                prop_assert_eq!(strata, (0..l).collect::<Vec<_>>());
            }
        }

        #[test]
        fn affine_corners(lo in -5.0f64..5.0, w in 0.0f64..3.0) {
            let r = Region::new(vec![lo, lo - 1.0], vec![lo + w, lo - 1.0 + 2.0 * w]).unwrap();
            let d = UnitDesign { points: vec![vec![0.0, 0.0], vec![1.0, 1.0]], dim: 2, kind: DesignKind::Grid };
            let m = map_to_region(&d, &r).unwrap();
            prop_assert_eq!(m[0].coords(), r.lower());
            prop_assert_eq!(m[1].coords(), r.upper());
        }

        #[test]
        fn try_design_members_are_feasible(c0 in 0.1f64..0.5, w in 0.01f64..0.2, u in 1usize..4) {
            let c = [c0, (1.0 - c0) / 2.0, (1.0 - c0) / 2.0];
            let r = Region::cube(&c, w).unwrap().with_constraint(Constraint::SimplexSumToOne);
            let td = build_try_design(&pt(&c), &r, &grid_design::<f64>(u, 2).unwrap()).unwrap();
            for p in td.points() {
                prop_assert!(r.contains(p.coords()));
            }
        }
    }
}
