//! ε-isometries: verification, construction from a Hausdorff bound, and exact
//! search for the smallest feasible ε on small spaces.

use serde::Serialize;

use super::coupling::Coupling;
use crate::error::{Error, Result};
use crate::hausdorff::local_hausdorff;
use crate::space::{ball_of, PointedSpace};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Searched,
    FromHausdorff,
    User,
}

/// A basepoint-preserving map from the left window `B(x, 1/ε)` into the right space.
#[derive(Debug, Clone, Serialize)]
pub struct EpsIsometry {
    pub eps: f64,
    /// `(left index, right index)` pairs, sorted by left index.
    pub map: Vec<(usize, usize)>,
    pub provenance: Provenance,
}

impl EpsIsometry {
    pub fn new(eps: f64, mut map: Vec<(usize, usize)>, provenance: Provenance) -> Self {
        map.sort_unstable();
        map.dedup_by_key(|p| p.0);
        EpsIsometry { eps, map, provenance }
    }

    pub fn image_of(&self, a: usize) -> Option<usize> {
        self.map.binary_search_by_key(&a, |p| p.0).ok().map(|k| self.map[k].1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IsoViolation {
    Basepoint { image: usize },
    Distortion { a: usize, b: usize, distortion: f64 },
    Surjectivity { t: usize, gap: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoCheck {
    pub pass: bool,
    pub max_distortion: f64,
    pub violations: Vec<IsoViolation>,
}

/// Verify distortion on the window and coarse surjectivity onto `B(y, 1/ε − ε)`.
pub fn check_eps_isometry(left: &PointedSpace, right: &PointedSpace, iso: &EpsIsometry) -> Result<IsoCheck> {
    let eps = iso.eps;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    let window = ball_of(left, left.base(), 1.0 / eps)?;
    let mut pairs = Vec::with_capacity(window.len());
    for &a in &window {
        match iso.image_of(a) {
            Some(t) => {
                right.check_index(t)?;
                pairs.push((a, t));
            }
            None => return Err(Error::IncompleteCandidate(format!("left point {a} lies in the window but is unmapped"))),
        }
    }
    let mut violations = Vec::new();
    let fx = iso.image_of(left.base()).expect("base lies in every window");
    if fx != right.base() {
        violations.push(IsoViolation::Basepoint { image: fx });
    }
    let mut max_distortion: f64 = 0.0;
    for (p, &(a, fa)) in pairs.iter().enumerate() {
        for &(b, fb) in &pairs[p + 1..] {
            let dist = (right.d(fa, fb) - left.d(a, b)).abs();
            max_distortion = max_distortion.max(dist);
            if !tol::le(dist, eps) {
                violations.push(IsoViolation::Distortion { a, b, distortion: dist });
            }
        }
    }
    let inner = 1.0 / eps - eps;
    if inner >= 0.0 {
        for t in ball_of(right, right.base(), inner)? {
            let gap = pairs.iter().map(|&(_, ft)| right.d(t, ft)).fold(f64::INFINITY, f64::min);
            if !tol::le(gap, eps) {
                violations.push(IsoViolation::Surjectivity { t, gap });
            }
        }
    }
    Ok(IsoCheck { pass: violations.is_empty(), max_distortion, violations })
}

/// Coupling `ζ(z, t) = inf_w d(z, w) + ρ(f(w), t) + ε` over the iso's domain.
/// Every mapped point sits within `ε` of its image in the glued host.
pub fn coupling_from_eps_isometry(left: &PointedSpace, right: &PointedSpace, iso: &EpsIsometry) -> Result<Coupling> {
    let check = check_eps_isometry(left, right, iso)?;
    if !check.pass {
        return Err(Error::Internal(format!("ε-isometry fails verification: {:?}", check.violations)));
    }
    let c = Coupling::from_map_with_slack(left, right, &iso.map, iso.eps)?;
    c.check(left, right)?;
    Ok(c)
}

/// Result of [`eps_isometry_from_hausdorff`]: the two sides as pointed spaces
/// (positions in the given index lists) and a `2ε`-isometry between them.
#[derive(Debug, Clone)]
pub struct HausdorffIso {
    pub left: PointedSpace,
    pub right: PointedSpace,
    pub iso: EpsIsometry,
}

/// For `H_z(X, Y) < ε` inside `host`, match every left point of `B(z, 1/(2ε))`
/// to its nearest right point; the result is a `2ε`-isometry.
pub fn eps_isometry_from_hausdorff(host: &PointedSpace, left: &[usize], right: &[usize], eps: f64) -> Result<HausdorffIso> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("ε must be positive, got {eps}")));
    }
    let hz = local_hausdorff(host, left, right)?.value;
    if !(hz < eps) {
        return Err(Error::NoConstruction(format!("H_z = {hz} is not below ε = {eps}")));
    }
    let (ls, _) = host.sub(left)?;
    let (rs, rb) = host.sub(right)?;
    let two = 2.0 * eps;
    let mut map = Vec::new();
    for a in ball_of(&ls, ls.base(), 1.0 / two)? {
        let ha = left[a];
        let t = if a == ls.base() {
            rb
        } else {
            let mut best = (f64::INFINITY, usize::MAX);
            for (j, &hj) in right.iter().enumerate() {
                let d = host.d(ha, hj);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best.1
        };
        map.push((a, t));
    }
    let iso = EpsIsometry::new(two, map, Provenance::FromHausdorff);
    let check = check_eps_isometry(&ls, &rs, &iso)?;
    if !check.pass {
        return Err(Error::Internal(format!("constructed map fails at 2ε: {:?}", check.violations)));
    }
    Ok(HausdorffIso { left: ls, right: rs, iso })
}

/// Values of ε where the feasibility of some map can change.
pub fn critical_values(left: &PointedSpace, right: &PointedSpace) -> Vec<f64> {
    let (n, m) = (left.len(), right.len());
    let (x, y) = (left.base(), right.base());
    let mut rd: Vec<f64> = Vec::with_capacity(m * m / 2 + m);
    for s in 0..m {
        for t in s..m {
            rd.push(right.d(s, t));
        }
    }
    rd.sort_by(f64::total_cmp);
    rd.dedup();
    let mut c = Vec::new();
    for a in 0..n {
        for b in a..n {
            let dab = left.d(a, b);
            c.extend(rd.iter().map(|r| (r - dab).abs()));
        }
        let dxa = left.d(x, a);
        if dxa > 0.0 {
            c.push(1.0 / dxa);
        }
    }
    for t in 0..m {
        let r = right.d(y, t);
        c.push(((r * r + 4.0).sqrt() - r) / 2.0);
    }
    c.extend(rd.iter().copied());
    c.retain(|v| *v > 0.0 && v.is_finite());
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoSearch {
    /// `inf{ε : an ε-isometry exists}`.
    pub eps_star: f64,
    /// Whether `eps_star` itself admits a map (otherwise only `ε > eps_star` does).
    pub attained: bool,
    /// The test value at which `maps` are feasible.
    pub witness_eps: f64,
    /// Feasible maps at `witness_eps`, as `(left, right)` pairs over the window.
    pub maps: Vec<Vec<(usize, usize)>>,
    /// Every smaller test value was proven infeasible, so `eps_star` is exact.
    pub exact: bool,
    /// Every feasible map at `witness_eps` is listed.
    pub maps_complete: bool,
    pub nodes: u64,
}

struct Dfs<'a> {
    left: &'a PointedSpace,
    right: &'a PointedSpace,
    eps: f64,
    order: Vec<usize>,
    options: Vec<Vec<usize>>,
    cover: Vec<usize>,
    assign: Vec<usize>,
    found: Vec<Vec<(usize, usize)>>,
    limit: usize,
    nodes: u64,
    budget: u64,
}

impl Dfs<'_> {
    fn run(&mut self, k: usize) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        if k == self.order.len() {
            let ok = self.cover.iter().all(|&t| {
                self.assign.iter().any(|&ft| tol::le(self.right.d(t, ft), self.eps))
            });
            if ok {
                self.found.push(self.order.iter().copied().zip(self.assign.iter().copied()).collect());
            }
            return self.found.len() < self.limit;
        }
        let a = self.order[k];
        for oi in 0..self.options[k].len() {
            let t = self.options[k][oi];
            let fits = (0..k).all(|p| {
                let dist = (self.right.d(t, self.assign[p]) - self.left.d(a, self.order[p])).abs();
                tol::le(dist, self.eps)
            });
            if fits {
                self.assign.push(t);
                let go_on = self.run(k + 1);
                self.assign.pop();
                if !go_on {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchEnd {
    Finished,
    LimitReached,
    BudgetExhausted,
}

/// Feasible ε-isometries at `eps`, up to `limit` maps and `budget` search nodes.
pub fn maps_at(left: &PointedSpace, right: &PointedSpace, eps: f64, limit: usize, budget: u64) -> (Vec<Vec<(usize, usize)>>, SearchEnd, u64) {
    let (x, y) = (left.base(), right.base());
    let mut order = ball_of(left, x, 1.0 / eps).expect("base is valid");
    order.retain(|&a| a != x);
    order.sort_by(|&a, &b| left.d(x, b).total_cmp(&left.d(x, a)).then(a.cmp(&b)));
    order.insert(0, x);
    let options: Vec<Vec<usize>> = order
        .iter()
        .map(|&a| {
            if a == x {
                return vec![y];
            }
            let dxa = left.d(x, a);
            let mut o: Vec<usize> = (0..right.len())
                .filter(|&t| tol::le((right.d(y, t) - dxa).abs(), eps))
                .collect();
            o.sort_by(|&s, &t| {
                let ds = (right.d(y, s) - dxa).abs();
                let dt = (right.d(y, t) - dxa).abs();
                ds.total_cmp(&dt).then(s.cmp(&t))
            });
            o
        })
        .collect();
    let inner = 1.0 / eps - eps;
    let cover = if inner >= 0.0 { ball_of(right, y, inner).expect("base is valid") } else { vec![] };
    let mut dfs = Dfs {
        left,
        right,
        eps,
        order,
        options,
        cover,
        assign: Vec::new(),
        found: Vec::new(),
        limit,
        nodes: 0,
        budget,
    };
    let end = if dfs.run(0) {
        SearchEnd::Finished
    } else if dfs.nodes > budget {
        SearchEnd::BudgetExhausted
    } else {
        SearchEnd::LimitReached
    };
    let mut maps = dfs.found;
    for m in &mut maps {
        m.sort_unstable();
    }
    (maps, end, dfs.nodes)
}

/// Scan critical values upwards for the smallest ε admitting an ε-isometry.
/// Values below `floor` are skipped (they are known infeasible).
pub fn min_eps_isometry(left: &PointedSpace, right: &PointedSpace, floor: f64, limit: usize, budget: u64) -> IsoSearch {
    let mut crit = critical_values(left, right);
    crit.retain(|&c| c < 2.0);
    crit.push(2.0);
    let mut nodes = 0u64;
    let mut exact = true;
    let mut prev = 0.0f64;
    for &c in &crit {
        // Gap (prev, c) then the point c.
        for (test, at_point) in [(0.5 * (prev + c), false), (c, true)] {
            if test < floor * (1.0 - 1e-12) {
                continue;
            }
            let left_budget = budget.saturating_sub(nodes).max(1);
            let (maps, end, used) = maps_at(left, right, test, limit, left_budget);
            nodes += used;
            if !maps.is_empty() {
                let eps_star = if at_point { c } else { prev };
                let mut found = (test, maps, end);
                if !at_point {
                    // Feasibility is constant on the open gap; take maps just above ε*.
                    let near = prev + (0.5 * (c - prev)).min(1e-10 * prev.max(1.0));
                    let (m2, e2, u2) = maps_at(left, right, near, limit, budget.saturating_sub(nodes).max(1));
                    nodes += u2;
                    if !m2.is_empty() {
                        found = (near, m2, e2);
                    }
                }
                let (witness_eps, maps, end) = found;
                let maps_complete = end == SearchEnd::Finished;
                return IsoSearch { eps_star, attained: at_point, witness_eps, maps, exact, maps_complete, nodes };
            }
            exact &= end == SearchEnd::Finished;
        }
        prev = c;
    }
    unreachable!("collapsing to the base is feasible at ε = 2")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> PointedSpace {
        PointedSpace::line(xs, 0).unwrap()
    }

    #[test]
    fn identity_passes() {
        let s = line(&[0.0, 1.0, 2.0, 7.0]);
        for eps in [0.01, 0.3, 2.0] {
            let iso = EpsIsometry::new(eps, (0..4).map(|i| (i, i)).collect(), Provenance::User);
            let c = check_eps_isometry(&s, &s, &iso).unwrap();
            assert!(c.pass);
            assert_eq!(c.max_distortion, 0.0);
        }
    }

    #[test]
    fn collapse_at_exact_eps_passes() {
        let eps = 0.25;
        let l = line(&[0.0, 1.0, 1.25]);
        let r = line(&[0.0, 1.0]);
        let iso = EpsIsometry::new(eps, vec![(0, 0), (1, 1), (2, 1)], Provenance::User);
        assert!(check_eps_isometry(&l, &r, &iso).unwrap().pass);
    }

    #[test]
    fn collapse_at_three_eps_fails() {
        let eps = 0.1;
        let l = line(&[0.0, 1.0, 1.0 + 3.0 * eps]);
        let r = line(&[0.0, 1.0]);
        let iso = EpsIsometry::new(eps, vec![(0, 0), (1, 1), (2, 1)], Provenance::User);
        let c = check_eps_isometry(&l, &r, &iso).unwrap();
        assert!(!c.pass);
        assert!((c.max_distortion - 0.3).abs() < 1e-12);
        assert!(matches!(c.violations[0], IsoViolation::Distortion { .. }));
    }

    #[test]
    fn missing_window_point_is_incomplete() {
        let l = line(&[0.0, 1.0]);
        let iso = EpsIsometry::new(0.1, vec![(0, 0)], Provenance::User);
        assert!(matches!(check_eps_isometry(&l, &l, &iso), Err(Error::IncompleteCandidate(_))));
    }

    #[test]
    fn from_hausdorff_example() {
        let host = line(&[0.0, 1.0, 1.05]);
        let h = eps_isometry_from_hausdorff(&host, &[0, 1], &[0, 2], 0.1).unwrap();
        assert_eq!(h.iso.image_of(1), Some(1));
        assert!((h.iso.eps - 0.2).abs() < 1e-15);
        let far = line(&[0.0, 1.0]);
        assert!(matches!(eps_isometry_from_hausdorff(&far, &[0], &[0, 1], 0.1), Err(Error::NoConstruction(_))));
    }

    #[test]
    fn segment_to_point_needs_one() {
        let (l, r) = (line(&[0.0, 1.0]), line(&[0.0]));
        let s = min_eps_isometry(&l, &r, 0.0, 100, 1_000_000);
        assert!((s.eps_star - 1.0).abs() < 1e-12);
        assert!(s.attained);
    }

    #[test]
    fn identical_spaces_need_zero() {
        let l = line(&[0.0, 1.0, 2.5]);
        let s = min_eps_isometry(&l, &l, 0.0, 100, 1_000_000);
        assert_eq!(s.eps_star, 0.0);
    }

    #[test]
    fn identity_coupling_from_iso() {
        let s = line(&[0.0, 1.0, 2.5]);
        let iso = EpsIsometry::new(0.25, (0..3).map(|i| (i, i)).collect(), Provenance::User);
        let c = coupling_from_eps_isometry(&s, &s, &iso).unwrap();
        assert!((c.get(1, 1) - 0.25).abs() < 1e-15);
        assert!((c.get(1, 2) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn collapsed_pair_coupling_is_metric() {
        let l = line(&[0.0, 0.5]);
        let r = line(&[0.0]);
        let iso = EpsIsometry::new(0.5, vec![(0, 0), (1, 0)], Provenance::User);
        let c = coupling_from_eps_isometry(&l, &r, &iso).unwrap();
        assert!(c.violations(&l, &r).is_empty());
    }

    #[test]
    fn invalid_iso_has_no_coupling() {
        let l = line(&[0.0, 3.0]);
        let r = line(&[0.0]);
        let iso = EpsIsometry::new(0.1, vec![(0, 0), (1, 0)], Provenance::User);
        assert!(coupling_from_eps_isometry(&l, &r, &iso).is_err());
    }
}
