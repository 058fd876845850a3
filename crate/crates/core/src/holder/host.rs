//! The target cloud, rescaled so the parameter cube has unit side.

use crate::error::{domain, Result};
use crate::par;
use crate::space::{MeasuredSpace, Norm};

/// Sorted-by-first-coordinate index for sup-norm nearest point queries.
#[derive(Debug, Clone)]
struct Nearest {
    order: Vec<usize>,
    keys: Vec<f64>,
}

impl Nearest {
    fn new(coords: &[Vec<f64>], members: &[usize]) -> Self {
        let mut order = members.to_vec();
        order.sort_by(|&a, &b| coords[a][0].total_cmp(&coords[b][0]).then(a.cmp(&b)));
        let keys = order.iter().map(|&i| coords[i][0]).collect();
        Self { order, keys }
    }

    /// Nearest member, lowest index on ties.
    fn query(&self, coords: &[Vec<f64>], t: &[f64]) -> Option<(f64, usize)> {
        let pos = self.keys.partition_point(|&k| k < t[0]);
        let mut best: Option<(f64, usize)> = None;
        let consider = |best: &mut Option<(f64, usize)>, j: usize| {
            let i = self.order[j];
            let d = sup(&coords[i], t);
            if best.is_none_or(|(bd, bi)| d < bd || (d == bd && i < bi)) {
                *best = Some((d, i));
            }
        };
        let mut j = pos;
        while j < self.keys.len() && best.is_none_or(|b| self.keys[j] - t[0] <= b.0) {
            consider(&mut best, j);
            j += 1;
        }
        let mut j = pos;
        while j > 0 && best.is_none_or(|b| t[0] - self.keys[j - 1] <= b.0) {
            consider(&mut best, j - 1);
            j -= 1;
        }
        best
    }
}

pub(crate) fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Measured sup-norm cloud with target set `C` and good set `G ⊆ C`.
#[derive(Debug, Clone)]
pub struct Host<'a> {
    pub space: &'a MeasuredSpace,
    /// Physical side of the parameter cube.
    pub r: f64,
    pub dim: usize,
    pub c: Vec<usize>,
    pub g: Vec<usize>,
    pub in_g: Vec<bool>,
    coords: Vec<Vec<f64>>,
    c_near: Nearest,
    /// Distance to and index of the nearest `G` point, for members of `C`.
    g_near: Vec<Option<(f64, usize)>>,
}

impl<'a> Host<'a> {
    pub fn new(space: &'a MeasuredSpace, c: &[usize], g: &[usize], r: f64) -> Result<Self> {
        let cloud = match space.space.cloud() {
            Some(cl) if cl.norm == Norm::Linf => cl,
            _ => return domain("the construction needs a sup-norm point cloud host"),
        };
        if !(r > 0.0 && r.is_finite()) {
            return domain(format!("cube side must be positive, got {r}"));
        }
        space.space.check_indices(c)?;
        space.space.check_indices(g)?;
        if c.is_empty() {
            return domain("C is empty");
        }
        let mut in_c = vec![false; space.len()];
        for &i in c {
            in_c[i] = true;
        }
        if let Some(&i) = g.iter().find(|&&i| !in_c[i]) {
            return domain(format!("G point {i} is not in C"));
        }
        let mut c = c.to_vec();
        c.sort_unstable();
        c.dedup();
        let mut g = g.to_vec();
        g.sort_unstable();
        g.dedup();
        let mut in_g = vec![false; space.len()];
        for &i in &g {
            in_g[i] = true;
        }
        let coords: Vec<Vec<f64>> = (0..space.len()).map(|i| cloud.point(i).iter().map(|x| x / r).collect()).collect();
        let c_near = Nearest::new(&coords, &c);
        let g_index = Nearest::new(&coords, &g);
        let found = par::map_slice(&c, |&i| if g.is_empty() { None } else { g_index.query(&coords, &coords[i]) });
        let mut g_near = vec![None; space.len()];
        for (&i, f) in c.iter().zip(found) {
            g_near[i] = f;
        }
        Ok(Self { space, r, dim: cloud.dim, c, g, in_g, coords, c_near, g_near })
    }

    /// Rescaled coordinates of a point.
    pub fn x(&self, i: usize) -> &[f64] {
        &self.coords[i]
    }

    /// Rescaled distance.
    pub fn d(&self, i: usize, j: usize) -> f64 {
        sup(&self.coords[i], &self.coords[j])
    }

    pub fn nearest_c(&self, t: &[f64]) -> usize {
        self.c_near.query(&self.coords, t).expect("C is non-empty").1
    }

    pub fn nearest_g(&self, i: usize) -> Option<(f64, usize)> {
        self.g_near[i]
    }

    /// Mass of the closed rescaled ball outside `G`.
    pub fn mass_outside_g(&self, center: &[f64], radius: f64) -> f64 {
        (0..self.space.len())
            .filter(|&i| !self.in_g[i] && sup(&self.coords[i], center) <= radius * (1.0 + 1e-12))
            .map(|i| self.space.weight(i))
            .sum()
    }

    pub fn ball_mass(&self, center: &[f64], radius: f64) -> f64 {
        (0..self.space.len())
            .filter(|&i| sup(&self.coords[i], center) <= radius * (1.0 + 1e-12))
            .map(|i| self.space.weight(i))
            .sum()
    }
}

/// Linear chart frame `A: ℝ^n → ℝ^dim` with its least-squares inverse.
#[derive(Debug, Clone)]
pub struct Frame {
    pub a: Vec<Vec<f64>>,
    pinv: Vec<Vec<f64>>,
}

impl Frame {
    /// `a` has one row per host coordinate and one column per parameter axis.
    pub fn new(a: Vec<Vec<f64>>) -> Result<Self> {
        let n = a.first().map_or(0, |r| r.len());
        if n == 0 || a.iter().any(|r| r.len() != n) {
            return domain("frame must be a non-empty rectangular matrix");
        }
        let ata: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a.iter().map(|r| r[i] * r[j]).sum()).collect()).collect();
        let inv = invert(ata).ok_or_else(|| crate::error::Error::Domain("frame columns are linearly dependent".into()))?;
        let pinv = (0..n).map(|i| (0..a.len()).map(|k| (0..n).map(|j| inv[i][j] * a[k][j]).sum()).collect()).collect();
        Ok(Self { a, pinv })
    }

    /// The first `n` host axes.
    pub fn coordinate(dim: usize, n: usize) -> Result<Self> {
        if n > dim {
            return domain(format!("cannot place {n} parameter axes in a {dim}-dimensional host"));
        }
        Self::new((0..dim).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect())
    }

    pub fn n(&self) -> usize {
        self.pinv.len()
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn apply(&self, q: &[f64]) -> Vec<f64> {
        self.a.iter().map(|r| r.iter().zip(q).map(|(x, y)| x * y).sum()).collect()
    }

    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        self.pinv.iter().map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
    }
}

fn invert(mut m: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let scale = m.iter().flatten().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return None;
        }
        m.swap(col, piv);
        inv.swap(col, piv);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..n {
            if row != col {
                let f = m[row][col];
                for j in 0..n {
                    m[row][j] -= f * m[col][j];
                    inv[row][j] -= f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Cloud, PointedSpace};

    #[test]
    fn nearest_matches_scan() {
        let pts: Vec<Vec<f64>> = (0..50).map(|i| vec![((i * 37) % 11) as f64 * 0.1, ((i * 13) % 7) as f64 * 0.2]).collect();
        let cloud = Cloud::new(2, Norm::Linf, &pts).unwrap();
        let s = MeasuredSpace::new(PointedSpace::from_cloud(cloud, 0).unwrap(), vec![1.0; 50]).unwrap();
        let all: Vec<usize> = (0..50).collect();
        let h = Host::new(&s, &all, &all[..10], 1.0).unwrap();
        for t in [[0.33, 0.41], [1.5, -0.2], [0.0, 0.0], [0.55, 1.0]] {
            let want = all
                .iter()
                .map(|&i| (sup(&pts[i], &t), i))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .unwrap()
                .1;
            assert_eq!(h.nearest_c(&t), want);
        }
        for &i in &all {
            let want = (0..10).map(|j| (sup(&pts[i], &pts[j]), j)).min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))).unwrap();
            assert_eq!(h.nearest_g(i), Some(want));
        }
    }

    #[test]
    fn frame_inverse() {
        let f = Frame::new(vec![vec![1.0, 0.5], vec![0.0, 1.0], vec![0.2, 0.0]]).unwrap();
        let q = [0.3, -0.7];
        let back = f.solve(&f.apply(&q));
        assert!((back[0] - q[0]).abs() < 1e-12 && (back[1] - q[1]).abs() < 1e-12);
        assert!(Frame::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).is_err());
    }
}
