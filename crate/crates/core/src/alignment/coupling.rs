//! Couplings: cross distances between two pointed spaces with identified basepoints.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::space::{validate, PointedSpace, Violation};
use crate::tol::TOL;

/// Cross distances `ζ(x_i, y_j)`; the two basepoints are glued, so
/// `cross[bl][br] = 0`, `cross[i][br] = d(i, bl)` and `cross[bl][j] = ρ(br, j)`.
#[derive(Debug, Clone, Serialize)]
pub struct Coupling {
    pub n_left: usize,
    pub n_right: usize,
    pub left_base: usize,
    pub right_base: usize,
    cross: Vec<f64>,
}

/// The disjoint union with basepoints identified, as one dense host.
#[derive(Debug, Clone)]
pub struct Glued {
    pub host: PointedSpace,
    /// Host index of each left point (identity on `0..n_left`).
    pub left_idx: Vec<usize>,
    /// Host index of each right point; the right base maps to the left base.
    pub right_idx: Vec<usize>,
    /// Host slot receiving each right atom's mass: a left point at distance
    /// zero when there is one, so coincident atoms are one atom.
    pub right_mass_idx: Vec<usize>,
}

impl Glued {
    /// Left and right weight vectors spread onto host indices.
    pub fn measures(&self, mu: &[f64], nu: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.host.len();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for (&h, &w) in self.left_idx.iter().zip(mu) {
            a[h] += w;
        }
        for (&h, &w) in self.right_mass_idx.iter().zip(nu) {
            b[h] += w;
        }
        (a, b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CouplingViolation {
    Shape { n_left: usize, n_right: usize },
    Basepoint { i: usize, j: usize, expected: f64, found: f64 },
    Metric(Violation),
}

impl Coupling {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cross[i * self.n_right + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.cross.chunks(self.n_right).map(|r| r.to_vec()).collect()
    }

    /// Raw constructor; runs the basepoint quotient so the result glues.
    pub fn from_cross(left: &PointedSpace, right: &PointedSpace, cross: Vec<f64>) -> Result<Self> {
        let (n, m) = (left.len(), right.len());
        if cross.len() != n * m {
            return domain(format!("cross matrix has {} entries, expected {}", cross.len(), n * m));
        }
        let (x, y) = (left.base(), right.base());
        let mut out = vec![0.0; n * m];
        for a in 0..n {
            for t in 0..m {
                let direct = cross[a * m + t];
                let via_base = left.d(a, x) + right.d(y, t);
                let swapped = cross[a * m + y] + cross[x * m + t];
                out[a * m + t] = direct.min(via_base).min(swapped);
            }
        }
        // Entries touching a basepoint are exact by construction.
        for a in 0..n {
            out[a * m + y] = left.d(a, x);
        }
        for t in 0..m {
            out[x * m + t] = right.d(y, t);
        }
        Ok(Coupling { n_left: n, n_right: m, left_base: x, right_base: y, cross: out })
    }

    /// The wedge sum `ζ(a, t) = d(a, x) + ρ(y, t)`; always valid.
    pub fn star(left: &PointedSpace, right: &PointedSpace) -> Self {
        let (n, m) = (left.len(), right.len());
        let (x, y) = (left.base(), right.base());
        let cross = (0..n * m).map(|k| left.d(k / m, x) + right.d(y, k % m)).collect();
        Coupling { n_left: n, n_right: m, left_base: x, right_base: y, cross }
    }

    /// Coupling induced by a partial map with pairs `(w, f(w))`, which must
    /// send the left base to the right base:
    /// `ζ(a, t) = κ + min_w d(a, w) + ρ(f(w), t)` with `κ` the map's distortion,
    /// followed by the basepoint quotient.
    pub fn from_partial_map(left: &PointedSpace, right: &PointedSpace, pairs: &[(usize, usize)]) -> Result<Self> {
        let (x, y) = (left.base(), right.base());
        if !pairs.contains(&(x, y)) {
            return domain("partial map must send the left base to the right base");
        }
        for &(a, t) in pairs {
            left.check_index(a)?;
            right.check_index(t)?;
        }
        let kappa = distortion(left, right, pairs);
        Coupling::from_map_with_slack(left, right, pairs, kappa)
    }

    /// `ζ(a, t) = c + min_w d(a, w) + ρ(f(w), t)`; valid whenever `c` is at
    /// least the distortion of `pairs`.
    pub(crate) fn from_map_with_slack(left: &PointedSpace, right: &PointedSpace, pairs: &[(usize, usize)], kappa: f64) -> Result<Self> {
        let (n, m) = (left.len(), right.len());
        // Inner minimum split into two passes: first over t via f(w), then over a.
        // h[w][t] = ρ(f(w), t)
        let rows: Vec<Vec<f64>> = crate::par::map_range(n, |a| {
            let mut row = vec![f64::INFINITY; m];
            for &(w, fw) in pairs {
                let daw = left.d(a, w);
                for (t, slot) in row.iter_mut().enumerate() {
                    let v = daw + right.d(fw, t);
                    if v < *slot {
                        *slot = v;
                    }
                }
            }
            row.into_iter().map(|v| v + kappa).collect()
        });
        Coupling::from_cross(left, right, rows.concat())
    }

    /// Both spaces sit in the same normed coordinates; translate so the bases
    /// coincide and use the ambient norm.
    pub fn ambient(left: &PointedSpace, right: &PointedSpace) -> Result<Self> {
        let (Some(cl), Some(cr)) = (left.cloud(), right.cloud()) else {
            return domain("ambient coupling needs coordinates on both sides");
        };
        if cl.dim != cr.dim || cl.norm != cr.norm {
            return domain("ambient coupling needs a common dimension and norm");
        }
        let (n, m) = (left.len(), right.len());
        let px: Vec<Vec<f64>> = (0..n).map(|i| left.coords(i).unwrap()).collect();
        let qy: Vec<Vec<f64>> = (0..m).map(|j| right.coords(j).unwrap()).collect();
        let (x0, y0) = (&px[left.base()], &qy[right.base()]);
        let rel = |p: &[f64], o: &[f64]| p.iter().zip(o).map(|(a, b)| a - b).collect::<Vec<f64>>();
        let pl: Vec<Vec<f64>> = px.iter().map(|p| rel(p, x0)).collect();
        let ql: Vec<Vec<f64>> = qy.iter().map(|q| rel(q, y0)).collect();
        let norm = cl.norm;
        let cross = (0..n * m).map(|k| norm.dist(&pl[k / m], &ql[k % m])).collect();
        Coupling::from_cross(left, right, cross)
    }

    pub fn glue(&self, left: &PointedSpace, right: &PointedSpace) -> Glued {
        let (n, m) = (self.n_left, self.n_right);
        let (x, y) = (self.left_base, self.right_base);
        let mut right_idx = Vec::with_capacity(m);
        let mut next = n;
        for j in 0..m {
            if j == y {
                right_idx.push(x);
            } else {
                right_idx.push(next);
                next += 1;
            }
        }
        let size = next;
        let mut back = vec![(true, 0usize); size];
        for i in 0..n {
            back[i] = (true, i);
        }
        for (j, &h) in right_idx.iter().enumerate() {
            if j != y {
                back[h] = (false, j);
            }
        }
        let mut flat = vec![0.0; size * size];
        for u in 0..size {
            for v in 0..size {
                flat[u * size + v] = match (back[u], back[v]) {
                    ((true, i), (true, k)) => left.d(i, k),
                    ((false, j), (false, k)) => right.d(j, k),
                    ((true, i), (false, j)) => self.get(i, j),
                    ((false, j), (true, i)) => self.get(i, j),
                };
            }
        }
        let right_mass_idx = right_idx
            .iter()
            .enumerate()
            .map(|(j, &h)| if h < n { h } else { (0..n).find(|&i| self.get(i, j) == 0.0).unwrap_or(h) })
            .collect();
        Glued {
            host: PointedSpace::from_flat_unchecked(size, flat, x),
            left_idx: (0..n).collect(),
            right_idx,
            right_mass_idx,
        }
    }

    /// Every reason the glued matrix fails to be a metric extending both sides.
    pub fn violations(&self, left: &PointedSpace, right: &PointedSpace) -> Vec<CouplingViolation> {
        if left.len() != self.n_left || right.len() != self.n_right {
            return vec![CouplingViolation::Shape { n_left: left.len(), n_right: right.len() }];
        }
        let mut out = Vec::new();
        let (x, y) = (self.left_base, self.right_base);
        for i in 0..self.n_left {
            let (e, f) = (left.d(i, x), self.get(i, y));
            if (e - f).abs() > TOL {
                out.push(CouplingViolation::Basepoint { i, j: y, expected: e, found: f });
            }
        }
        for j in 0..self.n_right {
            let (e, f) = (right.d(y, j), self.get(x, j));
            if (e - f).abs() > TOL {
                out.push(CouplingViolation::Basepoint { i: x, j, expected: e, found: f });
            }
        }
        let g = self.glue(left, right);
        out.extend(validate(&g.host).into_iter().map(CouplingViolation::Metric));
        out
    }

    pub fn check(&self, left: &PointedSpace, right: &PointedSpace) -> Result<()> {
        match self.violations(left, right).into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::Internal(format!("coupling is not a valid gluing: {v:?}"))),
        }
    }

    /// Max-plus repair towards the triangle-inequality polytope, up to `sweeps`
    /// passes. Returns `None` when it does not settle.
    pub fn repaired(&self, left: &PointedSpace, right: &PointedSpace, sweeps: usize) -> Option<Self> {
        let (n, m) = (self.n_left, self.n_right);
        let mut c = self.cross.clone();
        for _ in 0..sweeps {
            let mut moved = false;
            for a in 0..n {
                for t in 0..m {
                    let cur = c[a * m + t];
                    let mut lo = 0.0f64;
                    let mut hi = f64::INFINITY;
                    for b in (0..n).filter(|&b| b != a) {
                        let cb = c[b * m + t];
                        lo = lo.max(left.d(a, b) - cb);
                        hi = hi.min(left.d(a, b) + cb);
                    }
                    for s in (0..m).filter(|&s| s != t) {
                        let cs = c[a * m + s];
                        lo = lo.max(right.d(t, s) - cs);
                        hi = hi.min(right.d(t, s) + cs);
                    }
                    let next = cur.max(lo).min(hi);
                    if (next - cur).abs() > 1e-12 * (1.0 + cur) {
                        c[a * m + t] = next;
                        moved = true;
                    }
                }
            }
            if !moved {
                let out = Coupling::from_cross(left, right, c).ok()?;
                return out.violations(left, right).is_empty().then_some(out);
            }
        }
        None
    }
}

/// `max |ρ(f(a), f(b)) − d(a, b)|` over pairs of the map.
pub fn distortion(left: &PointedSpace, right: &PointedSpace, pairs: &[(usize, usize)]) -> f64 {
    let mut k: f64 = 0.0;
    for (p, &(a, fa)) in pairs.iter().enumerate() {
        for &(b, fb) in &pairs[p + 1..] {
            k = k.max((right.d(fa, fb) - left.d(a, b)).abs());
        }
    }
    k
}
