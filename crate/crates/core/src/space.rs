//! Finite pointed metric (measure) spaces.
//!
//! Distances are stored either as a dense matrix or implicitly as a point cloud
//! under a norm. Both carry a length scale so that rescaling is free and
//! composes exactly: the ball test compares raw distances against `r * scale`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::tol::{self, TRIANGLE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    Linf,
    L2,
}

impl Norm {
    pub fn eval(self, v: &[f64]) -> f64 {
        match self {
            Norm::Linf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Norm::L2 => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    pub fn dist(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::Linf => a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs())),
            Norm::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Coordinates of a point cloud in a finite-dimensional normed host.
#[derive(Debug, Clone, PartialEq)]
pub struct Cloud {
    pub dim: usize,
    pub norm: Norm,
    coords: Vec<f64>,
}

impl Cloud {
    pub fn new(dim: usize, norm: Norm, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return domain("cloud dimension must be positive");
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return domain(format!("point {i} has {} coordinates, expected {dim}", p.len()));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return domain(format!("point {i} has a non-finite coordinate"));
            }
            coords.extend_from_slice(p);
        }
        Ok(Cloud { dim, norm, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    fn select(&self, idx: &[usize]) -> Cloud {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        Cloud { dim: self.dim, norm: self.norm, coords }
    }
}

#[derive(Debug, Clone)]
enum Metric {
    Dense(Arc<Vec<f64>>),
    Cloud(Arc<Cloud>),
}

/// A finite metric space with a distinguished basepoint.
#[derive(Debug, Clone)]
pub struct PointedSpace {
    n: usize,
    metric: Metric,
    base: usize,
    scale: f64,
}

/// A reported failure of a metric-space invariant.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    Base { base: usize, n: usize },
    NonFinite { i: usize, j: usize },
    Negative { i: usize, j: usize, value: f64 },
    Diagonal { i: usize, value: f64 },
    Symmetry { i: usize, j: usize, dij: f64, dji: f64 },
    Triangle { i: usize, j: usize, k: usize, excess: f64 },
}

const MAX_REPORTED: usize = 64;

impl PointedSpace {
    /// Build from a full distance matrix, rejecting anything `validate` flags.
    pub fn from_matrix(dist: &[Vec<f64>], base: usize) -> Result<Self> {
        let n = dist.len();
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return domain(format!("row {i} has length {}, expected {n}", row.len()));
            }
            flat.extend_from_slice(row);
        }
        let s = PointedSpace::from_flat_unchecked(n, flat, base);
        match validate(&s).into_iter().next() {
            None => Ok(s),
            Some(v) => domain(format!("invalid metric: {v:?}")),
        }
    }

    /// Dense row-major matrix, trusted by the caller. Only the base index is checked.
    pub fn from_flat_unchecked(n: usize, dist: Vec<f64>, base: usize) -> Self {
        assert_eq!(dist.len(), n * n, "distance buffer has wrong length");
        PointedSpace { n, metric: Metric::Dense(Arc::new(dist)), base, scale: 1.0 }
    }

    pub fn from_cloud(cloud: Cloud, base: usize) -> Result<Self> {
        let n = cloud.len();
        if n == 0 {
            return domain("empty point cloud");
        }
        if base >= n {
            return domain(format!("base {base} out of range for {n} points"));
        }
        Ok(PointedSpace { n, metric: Metric::Cloud(Arc::new(cloud)), base, scale: 1.0 })
    }

    /// Points on the real line.
    pub fn line(xs: &[f64], base: usize) -> Result<Self> {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        PointedSpace::from_cloud(Cloud::new(1, Norm::Linf, &pts)?, base)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Length unit relative to the stored raw distances.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    #[inline]
    fn raw(&self, i: usize, j: usize) -> f64 {
        match &self.metric {
            Metric::Dense(m) => m[i * self.n + j],
            Metric::Cloud(c) => c.norm.dist(c.point(i), c.point(j)),
        }
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        if self.scale == 1.0 {
            self.raw(i, j)
        } else {
            self.raw(i, j) / self.scale
        }
    }

    /// Closed-ball membership `d(i, j) <= r`, with rounding slack.
    #[inline]
    pub fn within(&self, i: usize, j: usize, r: f64) -> bool {
        tol::le(self.raw(i, j), r * self.scale)
    }

    pub fn cloud(&self) -> Option<&Cloud> {
        match &self.metric {
            Metric::Cloud(c) => Some(c),
            Metric::Dense(_) => None,
        }
    }

    /// Host coordinates of point `i`, in the current length unit.
    pub fn coords(&self, i: usize) -> Option<Vec<f64>> {
        self.cloud().map(|c| c.point(i).iter().map(|x| x / self.scale).collect())
    }

    pub fn with_base(&self, base: usize) -> Result<Self> {
        if base >= self.n {
            return domain(format!("base {base} out of range for {} points", self.n));
        }
        Ok(PointedSpace { base, ..self.clone() })
    }

    /// Same space with all distances divided by `r`.
    pub fn scaled(&self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::DegenerateScale(format!("scale {r} must be positive and finite")));
        }
        Ok(PointedSpace { scale: self.scale * r, ..self.clone() })
    }

    /// Metric subspace on `idx`, in that order. The base must be among them.
    pub fn sub(&self, idx: &[usize]) -> Result<(Self, usize)> {
        let Some(b) = idx.iter().position(|&i| i == self.base) else {
            return domain("subspace must contain the basepoint");
        };
        self.check_indices(idx)?;
        let metric = match &self.metric {
            Metric::Cloud(c) => Metric::Cloud(Arc::new(c.select(idx))),
            Metric::Dense(_) => {
                let m = idx.len();
                let mut flat = Vec::with_capacity(m * m);
                for &i in idx {
                    for &j in idx {
                        flat.push(self.raw(i, j));
                    }
                }
                Metric::Dense(Arc::new(flat))
            }
        };
        Ok((PointedSpace { n: idx.len(), metric, base: b, scale: self.scale }, b))
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            domain(format!("index {i} out of range for {} points", self.n))
        }
    }

    pub fn check_indices(&self, idx: &[usize]) -> Result<()> {
        idx.iter().try_for_each(|&i| self.check_index(i))
    }

    /// Dense copy of the distance matrix in the current unit.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.d(i, j)).collect()).collect()
    }

    pub fn diam(&self, idx: &[usize]) -> f64 {
        let mut m: f64 = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                m = m.max(self.d(i, j));
            }
        }
        m
    }

    /// `min_{s in set} d(i, s)`, infinite for an empty set.
    pub fn dist_to_set(&self, i: usize, set: &[usize]) -> f64 {
        set.iter().fold(f64::INFINITY, |m, &s| m.min(self.d(i, s)))
    }
}

/// Closed ball `B(center, r)` with indices in increasing order.
pub fn ball_of(s: &PointedSpace, center: usize, r: f64) -> Result<Vec<usize>> {
    Ok(ball_with_ties(s, center, r)?.members)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ball {
    pub members: Vec<usize>,
    /// Members whose distance equals the radius up to rounding.
    pub ties: Vec<usize>,
}

pub fn ball_with_ties(s: &PointedSpace, center: usize, r: f64) -> Result<Ball> {
    s.check_index(center)?;
    if !(r >= 0.0) {
        return domain(format!("negative radius {r}"));
    }
    let mut members = Vec::new();
    let mut ties = Vec::new();
    for i in 0..s.len() {
        if s.within(center, i, r) {
            members.push(i);
            let raw = s.raw(center, i);
            if !tol::lt(raw, r * s.scale) {
                ties.push(i);
            }
        }
    }
    Ok(Ball { members, ties })
}

/// Every invariant violation of `s`, capped at a fixed number of reports.
pub fn validate(s: &PointedSpace) -> Vec<Violation> {
    let n = s.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Violation::Empty);
        return out;
    }
    if s.base >= n {
        out.push(Violation::Base { base: s.base, n });
    }
    if s.cloud().is_some() {
        // Norm-induced distances are metrics; coordinates were checked finite.
        return out;
    }
    for i in 0..n {
        let dii = s.d(i, i);
        if dii != 0.0 {
            out.push(Violation::Diagonal { i, value: dii });
        }
        for j in 0..n {
            let dij = s.d(i, j);
            if !dij.is_finite() {
                out.push(Violation::NonFinite { i, j });
            } else if dij < 0.0 {
                out.push(Violation::Negative { i, j, value: dij });
            }
            if j > i && dij != s.d(j, i) {
                out.push(Violation::Symmetry { i, j, dij, dji: s.d(j, i) });
            }
        }
        if out.len() >= MAX_REPORTED {
            return out;
        }
    }
    if !out.is_empty() {
        return out;
    }
    let rows: Vec<Vec<Violation>> = crate::par::map_range(n, |i| {
        let mut v = Vec::new();
        for j in 0..n {
            let dij = s.d(i, j);
            for k in 0..n {
                let excess = s.d(i, k) - (dij + s.d(j, k));
                if excess > TRIANGLE_TOL {
                    v.push(Violation::Triangle { i, j, k, excess });
                    if v.len() >= MAX_REPORTED {
                        return v;
                    }
                }
            }
        }
        v
    });
    out.extend(rows.into_iter().flatten().take(MAX_REPORTED));
    out
}

/// A pointed space with atom weights.
///
/// Weights are stored as raw masses over a normalizer so that repeated
/// rescaling normalizes by a freshly summed raw ball mass.
#[derive(Debug, Clone)]
pub struct MeasuredSpace {
    pub space: PointedSpace,
    mass: Vec<f64>,
    norm: f64,
}

impl MeasuredSpace {
    pub fn new(space: PointedSpace, weight: Vec<f64>) -> Result<Self> {
        if weight.len() != space.len() {
            return domain(format!(
                "weight length {} does not match {} points",
                weight.len(),
                space.len()
            ));
        }
        if let Some(i) = weight.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return domain(format!("weight {i} is negative or non-finite"));
        }
        Ok(MeasuredSpace { space, mass: weight, norm: 1.0 })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn base(&self) -> usize {
        self.space.base()
    }

    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if self.norm == 1.0 {
            self.mass[i]
        } else {
            self.mass[i] / self.norm
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mass[i] > 0.0).collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass_of(0..self.len())
    }

    pub fn mass_of(&self, idx: impl IntoIterator<Item = usize>) -> f64 {
        let raw: f64 = idx.into_iter().map(|i| self.mass[i]).sum();
        raw / self.norm
    }

    fn raw_mass_of(&self, idx: &[usize]) -> f64 {
        idx.iter().map(|&i| self.mass[i]).sum()
    }

    pub fn ball(&self, center: usize, r: f64) -> Result<Vec<usize>> {
        ball_of(&self.space, center, r)
    }

    pub fn ball_mass(&self, center: usize, r: f64) -> Result<f64> {
        Ok(self.mass_of(self.ball(center, r)?))
    }

    pub fn with_base(&self, base: usize) -> Result<Self> {
        Ok(MeasuredSpace { space: self.space.with_base(base)?, ..self.clone() })
    }

    /// Metric and measure restricted to `idx` (in that order); base must be kept.
    pub fn sub(&self, idx: &[usize]) -> Result<Self> {
        let (space, _) = self.space.sub(idx)?;
        let mass = idx.iter().map(|&i| self.mass[i]).collect();
        Ok(MeasuredSpace { space, mass, norm: self.norm })
    }

    /// Same space and metric with a different weight vector.
    pub fn reweighted(&self, weight: Vec<f64>) -> Result<Self> {
        MeasuredSpace::new(self.space.clone(), weight)
    }
}

/// `μ|keep`: weights outside `keep` are zeroed, distances are untouched.
pub fn restrict(s: &MeasuredSpace, keep: &[usize]) -> Result<MeasuredSpace> {
    s.space.check_indices(keep)?;
    if !keep.contains(&s.base()) {
        return domain("restriction must keep the basepoint");
    }
    let mut flag = vec![false; s.len()];
    for &i in keep {
        flag[i] = true;
    }
    let mass = s.mass.iter().zip(&flag).map(|(&m, &k)| if k { m } else { 0.0 }).collect();
    Ok(MeasuredSpace { space: s.space.clone(), mass, norm: s.norm })
}

/// The dilation `T_r`: distances over `r`, weights over `μ(B(x, r))`.
pub fn rescale(s: &MeasuredSpace, r: f64) -> Result<MeasuredSpace> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::DegenerateScale(format!("radius {r} must be positive and finite")));
    }
    let ball = s.ball(s.base(), r)?;
    let raw = s.raw_mass_of(&ball);
    if !(raw > 0.0) {
        return Err(Error::DegenerateScale(format!("ball of radius {r} at the basepoint has zero mass")));
    }
    Ok(MeasuredSpace { space: s.space.scaled(r)?, mass: s.mass.clone(), norm: raw })
}

/// Both spaces placed in a common host with identified basepoints.
#[derive(Debug, Clone)]
pub struct EmbeddedPair {
    pub host: PointedSpace,
    pub left_idx: Vec<usize>,
    pub right_idx: Vec<usize>,
    pub left_weight: Vec<f64>,
    pub right_weight: Vec<f64>,
}

impl EmbeddedPair {
    /// Left and right weights as full vectors over host indices.
    pub fn host_measures(&self) -> (Vec<f64>, Vec<f64>) {
        let mut mu = vec![0.0; self.host.len()];
        let mut nu = vec![0.0; self.host.len()];
        for (&i, &w) in self.left_idx.iter().zip(&self.left_weight) {
            mu[i] += w;
        }
        for (&i, &w) in self.right_idx.iter().zip(&self.right_weight) {
            nu[i] += w;
        }
        (mu, nu)
    }
}
