//! Interval estimates of `d_pGH`, `d_pmGH` and `d_*` over couplings.
//!
//! Upper bounds come from explicit couplings. Lower bounds come from the
//! ε-isometry sandwich when the exact search applies, and otherwise from the
//! radial projection `π = d(base, ·)`, which is 1-Lipschitz into the half-line in
//! every coupling and so can only shrink `H_z` and `F_z`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::coupling::{distortion, Coupling};
use super::iso::min_eps_isometry;
use crate::error::{Error, Result};
use crate::flat::flat_bracket;
use crate::hausdorff::{hz_from_profile, hz_scan};
use crate::space::{MeasuredSpace, PointedSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactSmall,
    BranchBound,
    LocalSearch,
}

/// Search limits. Every knob is deterministic given `seed`. Missing fields
/// deserialize to their defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    /// Backtracking nodes for the ε-isometry search.
    pub nodes: u64,
    /// Largest side for which the exact map search runs.
    pub exact_max: usize,
    /// Maps turned into couplings.
    pub map_limit: usize,
    /// Randomized greedy map restarts.
    pub restarts: usize,
    /// Local-search moves on the cross matrix.
    pub local_steps: usize,
    /// Bisection tolerance of every flat evaluation.
    pub flat_tol: f64,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            nodes: 2_000_000,
            exact_max: 10,
            map_limit: 256,
            restarts: 8,
            local_steps: 24,
            flat_tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceEstimate {
    pub lower: f64,
    pub upper: f64,
    pub witness_upper: Coupling,
    pub method: Method,
    /// Budget ran out before the method's guarantees were established.
    pub inconclusive: bool,
    /// Smallest ε admitting an ε-isometry, when the exact search ran.
    pub eps_star: Option<f64>,
    /// The ε at which candidate maps were enumerated.
    pub witness_eps: Option<f64>,
}

/// `H_0` between the radial distance sets on the half-line.
pub fn radial_hz_lower(left: &PointedSpace, right: &PointedSpace) -> f64 {
    let rl: Vec<f64> = (0..left.len()).map(|i| left.d(left.base(), i)).collect();
    let rr: Vec<f64> = (0..right.len()).map(|j| right.d(right.base(), j)).collect();
    let gap = |v: f64, other: &[f64]| other.iter().fold(f64::INFINITY, |m, &w| m.min((v - w).abs()));
    let pts: Vec<(f64, f64)> = rl
        .iter()
        .map(|&v| (v, gap(v, &rr)))
        .chain(rr.iter().map(|&v| (v, gap(v, &rl))))
        .collect();
    hz_from_profile(&pts).value
}

/// Radial pushforwards of both measures on a common half-line host.
pub fn radial_pushforward(left: &MeasuredSpace, right: &MeasuredSpace) -> Result<(PointedSpace, Vec<f64>, Vec<f64>)> {
    let mut vals: Vec<f64> = (0..left.len())
        .map(|i| left.space.d(left.base(), i))
        .chain((0..right.len()).map(|j| right.space.d(right.base(), j)))
        .collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let host = PointedSpace::line(&vals, 0)?;
    let slot = |v: f64| vals.binary_search_by(|p| p.total_cmp(&v)).expect("value present");
    let mut mu = vec![0.0; vals.len()];
    let mut nu = vec![0.0; vals.len()];
    for i in 0..left.len() {
        mu[slot(left.space.d(left.base(), i))] += left.weight(i);
    }
    for j in 0..right.len() {
        nu[slot(right.space.d(right.base(), j))] += right.weight(j);
    }
    Ok((host, mu, nu))
}

pub fn radial_flat_lower(left: &MeasuredSpace, right: &MeasuredSpace, tol: f64) -> Result<f64> {
    let (host, mu, nu) = radial_pushforward(left, right)?;
    Ok(flat_bracket(&host, &mu, &nu, tol)?.0)
}

/// `H_z` of the two sides inside the glued host of `c`.
pub fn coupling_hz(left: &PointedSpace, right: &PointedSpace, c: &Coupling) -> f64 {
    let g = c.glue(left, right);
    hz_scan(&g.host, &g.left_idx, &g.right_idx).value
}

/// `(lo, hi)` bracket of `F_z(μ, ν)` inside the glued host of `c`.
pub fn coupling_flat(left: &MeasuredSpace, right: &MeasuredSpace, c: &Coupling, tol: f64) -> Result<(f64, f64)> {
    let g = c.glue(&left.space, &right.space);
    let (mu, nu) = g.measures(&left.weights(), &right.weights());
    flat_bracket(&g.host, &mu, &nu, tol)
}

pub fn estimate_dpgh(left: &PointedSpace, right: &PointedSpace, budget: &Budget) -> Result<DistanceEstimate> {
    let radial = radial_hz_lower(left, right);
    let mut cands = vec![Coupling::star(left, right)];
    let mut eps_star = None;
    let mut witness_eps = f64::INFINITY;
    let mut method = Method::LocalSearch;
    let mut inconclusive = false;
    let mut lower = radial;
    if left.len() <= budget.exact_max && right.len() <= budget.exact_max {
        let s = min_eps_isometry(left, right, radial / 2.0, budget.map_limit, budget.nodes);
        for m in &s.maps {
            cands.push(Coupling::from_partial_map(left, right, m)?);
        }
        witness_eps = s.witness_eps;
        if s.exact {
            lower = lower.max(s.eps_star / 2.0);
            eps_star = Some(s.eps_star);
        } else {
            inconclusive = true;
        }
        method = if s.exact && s.maps_complete { Method::ExactSmall } else { Method::BranchBound };
    } else {
        cands.extend(greedy_couplings(left, right, budget)?);
    }
    let scores = crate::par::map_slice(&cands, |c| coupling_hz(left, right, c));
    let (k, upper) = argmin(&scores);
    if upper > 2.0 * witness_eps + crate::tol::TOL {
        return Err(Error::Internal(format!("coupling bound {upper} exceeds 2ε = {}", 2.0 * witness_eps)));
    }
    Ok(DistanceEstimate {
        lower: lower.min(upper),
        upper,
        witness_upper: cands.swap_remove(k),
        method,
        inconclusive,
        eps_star,
        witness_eps: witness_eps.is_finite().then_some(witness_eps),
    })
}

/// Which objective a measured estimate minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// `G_{0,1} = F_z`.
    Flat,
    /// `G_{1,1} = H_z + F_z`.
    HausdorffPlusFlat,
}

pub fn estimate_dstar(left: &MeasuredSpace, right: &MeasuredSpace, budget: &Budget, seeds: &[Coupling]) -> Result<DistanceEstimate> {
    estimate_measured(left, right, budget, seeds, Objective::Flat)
}

pub fn estimate_dpmgh(left: &MeasuredSpace, right: &MeasuredSpace, budget: &Budget, seeds: &[Coupling]) -> Result<DistanceEstimate> {
    estimate_measured(left, right, budget, seeds, Objective::HausdorffPlusFlat)
}

fn score(left: &MeasuredSpace, right: &MeasuredSpace, c: &Coupling, tol: f64, obj: Objective) -> Result<f64> {
    let f = coupling_flat(left, right, c, tol)?.1;
    Ok(match obj {
        Objective::Flat => f,
        Objective::HausdorffPlusFlat => f + coupling_hz(&left.space, &right.space, c),
    })
}

fn estimate_measured(
    left: &MeasuredSpace,
    right: &MeasuredSpace,
    budget: &Budget,
    seeds: &[Coupling],
    obj: Objective,
) -> Result<DistanceEstimate> {
    let (ls, rs) = (&left.space, &right.space);
    let mut cands = vec![Coupling::star(ls, rs)];
    cands.extend(seeds.iter().cloned());
    if let Ok(c) = Coupling::ambient(ls, rs) {
        cands.push(c);
    }
    let mut method = Method::LocalSearch;
    let mut inconclusive = false;
    if ls.len() <= budget.exact_max && rs.len() <= budget.exact_max {
        let s = min_eps_isometry(ls, rs, 0.0, budget.map_limit, budget.nodes);
        for m in &s.maps {
            cands.push(Coupling::from_partial_map(ls, rs, m)?);
        }
        method = if s.exact && s.maps_complete { Method::ExactSmall } else { Method::BranchBound };
        inconclusive = !s.exact;
    }
    cands.extend(greedy_couplings(ls, rs, budget)?);
    let tol = budget.flat_tol;
    let scores: Vec<f64> = crate::par::map_slice(&cands, |c| score(left, right, c, tol, obj))
        .into_iter()
        .collect::<Result<_>>()?;
    let (k, mut upper) = argmin(&scores);
    let mut best = cands.swap_remove(k);
    if budget.local_steps > 0 && ls.len() * rs.len() <= 900 && upper > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ 0x5eed);
        let mut improved = false;
        for _ in 0..budget.local_steps {
            let Some(c) = perturb(&best, ls, rs, &mut rng) else { continue };
            let v = score(left, right, &c, tol, obj)?;
            if v < upper {
                upper = v;
                best = c;
                improved = true;
            }
        }
        if improved && method != Method::ExactSmall {
            method = Method::LocalSearch;
        }
    }
    let lower = match obj {
        Objective::Flat => radial_flat_lower(left, right, tol)?,
        Objective::HausdorffPlusFlat => radial_flat_lower(left, right, tol)? + radial_hz_lower(ls, rs),
    };
    Ok(DistanceEstimate { lower: lower.min(upper), upper, witness_upper: best, method, inconclusive, eps_star: None, witness_eps: None })
}

/// Lower a few cross entries towards their feasible minimum, then repair.
fn perturb(c: &Coupling, left: &PointedSpace, right: &PointedSpace, rng: &mut ChaCha8Rng) -> Option<Coupling> {
    let (n, m) = (c.n_left, c.n_right);
    let mut cross: Vec<f64> = c.rows().concat();
    let moves = rng.gen_range(1..=3.min(n * m));
    for _ in 0..moves {
        let a = rng.gen_range(0..n);
        let t = rng.gen_range(0..m);
        if a == c.left_base || t == c.right_base {
            continue;
        }
        let floor = (left.d(a, left.base()) - right.d(right.base(), t)).abs();
        let cur = cross[a * m + t];
        cross[a * m + t] = floor + (cur - floor) * rng.gen_range(0.0..0.9);
    }
    Coupling::from_cross(left, right, cross).ok()?.repaired(left, right, 100)
}

/// Couplings from randomized greedy maps on the whole left space.
pub fn greedy_couplings(left: &PointedSpace, right: &PointedSpace, budget: &Budget) -> Result<Vec<Coupling>> {
    let (x, y) = (left.base(), right.base());
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut out = Vec::new();
    if left.len() == right.len() && x == y {
        let id: Vec<(usize, usize)> = (0..left.len()).map(|i| (i, i)).collect();
        out.push(Coupling::from_partial_map(left, right, &id)?);
    }
    let mut order: Vec<usize> = (0..left.len()).filter(|&a| a != x).collect();
    order.sort_by(|&a, &b| left.d(x, a).total_cmp(&left.d(x, b)).then(a.cmp(&b)));
    for r in 0..budget.restarts {
        if r > 0 {
            order.shuffle(&mut rng);
        }
        let mut pairs = vec![(x, y)];
        for &a in &order {
            let mut best = (f64::INFINITY, usize::MAX);
            for t in 0..right.len() {
                let worst = pairs
                    .iter()
                    .map(|&(b, fb)| (right.d(t, fb) - left.d(a, b)).abs())
                    .fold(0.0f64, f64::max);
                let jitter = if r > 0 { rng.gen_range(0.0..1e-9) } else { 0.0 };
                if worst + jitter < best.0 {
                    best = (worst + jitter, t);
                }
            }
            pairs.push((a, best.1));
        }
        debug_assert!(distortion(left, right, &pairs).is_finite());
        out.push(Coupling::from_partial_map(left, right, &pairs)?);
    }
    Ok(out)
}

fn argmin(v: &[f64]) -> (usize, f64) {
    v.iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(bk, bv), (k, x)| if x < bv { (k, x) } else { (bk, bv) })
}
