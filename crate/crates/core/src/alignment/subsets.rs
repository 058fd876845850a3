//! Large subsets with small local Hausdorff distance, carved out of a coupling
//! whose flat distance is small, and the two directions of the `d_*`/`d_pmGH`
//! comparison built on them.

use serde::Serialize;

use super::coupling::Coupling;
use super::estimate::{
    coupling_flat, coupling_hz, estimate_dstar, radial_flat_lower, radial_hz_lower, Budget, DistanceEstimate, Method,
};
use crate::error::{Error, Result};
use crate::flat::{flat_below, flat_bracket, flat_lr_value};
use crate::hausdorff::hz_scan;
use crate::space::MeasuredSpace;
use crate::tol;

pub const DEFAULT_DELTA: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct LargeSubsetPair {
    /// Left indices of `K_μ`.
    pub k_mu: Vec<usize>,
    /// Right indices of `K_ν`.
    pub k_nu: Vec<usize>,
    /// `μ(B(z, r) ∖ K_μ)`.
    pub mass_defect_mu: f64,
    pub mass_defect_nu: f64,
    /// `F^{1/ε, r}_z(μ, ν)` in the glued host.
    pub flat_lr: f64,
    /// `∫ g d(μ − ν)` for the two carving bumps; each is at most `flat_lr`.
    pub bump_gap: [f64; 2],
    /// `H_z(K_μ, K_ν)` and its guaranteed ceiling `max{1/(r − ε), ε}`.
    pub hz: f64,
    pub hz_bound: f64,
    /// Pointed measured distance between `K_μ ∪ {x}` and `K_ν ∪ {y}` with
    /// their restricted measures, bounded through the restricted coupling.
    pub pmgh_between: DistanceEstimate,
}

/// Carve `K_μ`, `K_ν` out of the supports inside `B(z, r)` of the glued host:
/// `K_μ = K′_μ ∖ ((K′_μ ∩ U(z, r − ε)) ∖ B(K′_ν, ε))` and symmetrically.
/// Both mass and Hausdorff guarantees are checked before returning.
pub fn extract_large_subsets(
    left: &MeasuredSpace,
    right: &MeasuredSpace,
    coupling: &Coupling,
    r: f64,
    eps: f64,
    delta: f64,
) -> Result<LargeSubsetPair> {
    if !(eps > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("need ε > 0 and finite r, got ε = {eps}, r = {r}")));
    }
    if !(r - eps > 0.0) {
        return Err(Error::Precondition(format!("r = {r} must exceed ε = {eps}")));
    }
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("δ must be positive, got {delta}")));
    }
    let g = coupling.glue(&left.space, &right.space);
    let host = &g.host;
    let z = host.base();
    let (mu, nu) = g.measures(&left.weights(), &right.weights());
    let f = flat_lr_value(host, &mu, &nu, 1.0 / eps, r)?;

    let in_ball = |h: usize| host.within(z, h, r);
    let kp_mu: Vec<usize> = g.left_idx.iter().copied().filter(|&h| mu[h] > 0.0 && in_ball(h)).collect();
    let kp_nu: Vec<usize> = dedup(g.right_mass_idx.iter().copied().filter(|&h| nu[h] > 0.0 && in_ball(h)).collect());
    let carve = |own: &[usize], other: &[usize]| -> (Vec<usize>, Vec<usize>) {
        let inner = r - eps;
        own.iter().partition(|&&h| {
            let open_inner = host.d(z, h) < inner;
            let near = other.iter().any(|&o| host.within(h, o, eps));
            !(open_inner && !near)
        })
    };
    let (k_mu_h, tilde_mu) = carve(&kp_mu, &kp_nu);
    let (k_nu_h, tilde_nu) = carve(&kp_nu, &kp_mu);

    let defect_mu: f64 = tilde_mu.iter().map(|&h| mu[h]).sum();
    let defect_nu: f64 = tilde_nu.iter().map(|&h| nu[h]).sum();
    let bump_mu = bump_integral(host, &tilde_mu, eps, &mu) - bump_integral(host, &tilde_mu, eps, &nu);
    let bump_nu = bump_integral(host, &tilde_nu, eps, &nu) - bump_integral(host, &tilde_nu, eps, &mu);
    let slack = 1e-9 * (1.0 + f);
    for (side, gap, defect) in [("μ", bump_mu, defect_mu), ("ν", bump_nu, defect_nu)] {
        if gap > f + slack {
            return Err(Error::Certificate(format!("bump for {side} integrates to {gap} above F = {f}")));
        }
        let ok = if f > 1e-9 { defect < (1.0 + delta) * f } else { defect <= slack };
        if !ok {
            return Err(Error::Certificate(format!("{side} defect {defect} not below (1+δ)F = {}", (1.0 + delta) * f)));
        }
    }
    let hz = hz_scan(host, &k_mu_h, &k_nu_h).value;
    let hz_bound = (1.0 / (r - eps)).max(eps);
    if !tol::le(hz, hz_bound) {
        return Err(Error::Certificate(format!("H_z(K_μ, K_ν) = {hz} exceeds {hz_bound}")));
    }

    let k_mu: Vec<usize> = k_mu_h.clone();
    let k_nu: Vec<usize> =
        (0..right.len()).filter(|&j| right.weight(j) > 0.0 && k_nu_h.contains(&g.right_mass_idx[j])).collect();
    let pmgh_between = restricted_pmgh(left, right, coupling, &k_mu, &k_nu, 1e-6)?;
    Ok(LargeSubsetPair {
        k_mu,
        k_nu,
        mass_defect_mu: defect_mu,
        mass_defect_nu: defect_nu,
        flat_lr: f,
        bump_gap: [bump_mu, bump_nu],
        hz,
        hz_bound,
        pmgh_between,
    })
}

fn dedup(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v.dedup();
    v
}

/// `∫ g dw` for `g = 1 − min(d(·, T), ε)/ε`.
fn bump_integral(host: &crate::space::PointedSpace, tilde: &[usize], eps: f64, w: &[f64]) -> f64 {
    if tilde.is_empty() {
        return 0.0;
    }
    (0..host.len())
        .filter(|&h| w[h] > 0.0)
        .map(|h| {
            let d = host.dist_to_set(h, tilde);
            w[h] * (1.0 - d.min(eps) / eps)
        })
        .sum()
}

fn with_base(mut idx: Vec<usize>, base: usize) -> Vec<usize> {
    if !idx.contains(&base) {
        idx.push(base);
    }
    idx.sort_unstable();
    idx
}

/// Restrict both sides (plus basepoints) and bound `H_z + F_z` through the
/// sub-coupling.
pub fn restricted_pmgh(
    left: &MeasuredSpace,
    right: &MeasuredSpace,
    coupling: &Coupling,
    k_mu: &[usize],
    k_nu: &[usize],
    flat_tol: f64,
) -> Result<DistanceEstimate> {
    let kl = with_base(k_mu.to_vec(), left.base());
    let kr = with_base(k_nu.to_vec(), right.base());
    let (ls, rs) = (left.sub(&kl)?, right.sub(&kr)?);
    let cross: Vec<f64> = kl.iter().flat_map(|&a| kr.iter().map(move |&t| coupling.get(a, t))).collect();
    let c = Coupling::from_cross(&ls.space, &rs.space, cross)?;
    let upper = coupling_hz(&ls.space, &rs.space, &c) + coupling_flat(&ls, &rs, &c, flat_tol)?.1;
    let lower = radial_hz_lower(&ls.space, &rs.space) + radial_flat_lower(&ls, &rs, flat_tol)?;
    Ok(DistanceEstimate {
        lower: lower.min(upper),
        upper,
        witness_upper: c,
        method: Method::LocalSearch,
        inconclusive: false,
        eps_star: None,
        witness_eps: None,
    })
}

/// `inf{ρ > 0 : μ(B(x, 1/ρ) ∖ K) < ρ}`, computed exactly over the step
/// function `ρ ↦ μ(B(x, 1/ρ) ∖ K)`.
pub fn subset_flat_radius(s: &MeasuredSpace, keep: &[usize]) -> f64 {
    let x = s.base();
    let mut kept = vec![false; s.len()];
    for &i in keep {
        kept[i] = true;
    }
    // Outside atoms by distance from the base; the ball B(x, 1/ρ) holds those
    // with d ≤ 1/ρ, so the mass is constant on (1/d_k, 1/d_{k+1}].
    let mut out: Vec<(f64, f64)> = (0..s.len())
        .filter(|&i| !kept[i] && s.weight(i) > 0.0)
        .map(|i| (s.space.d(x, i), s.weight(i)))
        .collect();
    if out.is_empty() {
        return 0.0;
    }
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    let total: f64 = out.iter().map(|p| p.1).sum();
    // Walk pieces from small ρ (big balls) upward.
    let mut mass = total;
    let mut lo: f64 = 0.0;
    let mut k = 0;
    while k < out.len() {
        let d = out[k].0;
        let hi = if d > 0.0 { 1.0 / d } else { f64::INFINITY };
        if mass < hi {
            return lo.max(mass);
        }
        while k < out.len() && out[k].0 == d {
            mass -= out[k].1;
            k += 1;
        }
        lo = hi;
    }
    lo.max(mass.max(0.0))
}

#[derive(Debug, Clone, Serialize)]
pub struct ForwardCertificate {
    pub subsets: LargeSubsetPair,
    /// `F^{1/ε,1/ε}` of the chosen coupling, which is below ε.
    pub flat_lr: f64,
    pub delta: f64,
    /// `μ(B(x, 1/ε) ∖ K_μ)` and `ν(B(y, 1/ε) ∖ K_ν)` with basepoints kept.
    pub defect_mu: f64,
    pub defect_nu: f64,
    pub hz: f64,
    /// Upper bound on `F_z(μ|K_μ, ν|K_ν)` in the same coupling.
    pub flat_k: f64,
    pub pmgh_upper: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConverseCertificate {
    pub r_mu: f64,
    pub r_nu: f64,
    pub flat_k: f64,
    pub flat_full: f64,
    /// `r_mu + flat_k + r_nu`, which must dominate `flat_full`.
    pub bound: f64,
    /// Defects and `flat_k` below ε, so `flat_full < 3ε` is owed.
    pub hypothesis: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub eps: f64,
    pub forward: Option<ForwardCertificate>,
    pub converse: Option<ConverseCertificate>,
    /// No coupling with flat value below ε was found.
    pub inconclusive: bool,
}

/// Run both directions at level `eps` using the first coupling (seeds first,
/// then the best found by search) whose flat value is below `eps`.
pub fn dstar_sandwich(
    left: &MeasuredSpace,
    right: &MeasuredSpace,
    eps: f64,
    budget: &Budget,
    seeds: &[Coupling],
) -> Result<SandwichReport> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Domain(format!("ε must lie in (0, 1/2), got {eps}")));
    }
    let below = |c: &Coupling| -> Result<bool> {
        let g = c.glue(&left.space, &right.space);
        let (mu, nu) = g.measures(&left.weights(), &right.weights());
        flat_below(&g.host, &mu, &nu, eps)
    };
    let mut chosen = None;
    for c in seeds {
        if below(c)? {
            chosen = Some(c.clone());
            break;
        }
    }
    if chosen.is_none() {
        let est = estimate_dstar(left, right, budget, seeds)?;
        if below(&est.witness_upper)? {
            chosen = Some(est.witness_upper);
        }
    }
    let Some(c) = chosen else {
        return Ok(SandwichReport { eps, forward: None, converse: None, inconclusive: true });
    };
    let forward = forward_direction(left, right, &c, eps, budget.flat_tol)?;
    let converse = converse_direction(left, right, &c, &forward.subsets.k_mu, &forward.subsets.k_nu, eps, budget.flat_tol)?;
    Ok(SandwichReport { eps, forward: Some(forward), converse: Some(converse), inconclusive: false })
}

fn forward_direction(left: &MeasuredSpace, right: &MeasuredSpace, c: &Coupling, eps: f64, ftol: f64) -> Result<ForwardCertificate> {
    let g = c.glue(&left.space, &right.space);
    let (mu, nu) = g.measures(&left.weights(), &right.weights());
    let f = flat_lr_value(&g.host, &mu, &nu, 1.0 / eps, 1.0 / eps)?;
    if !(f < eps) {
        return Err(Error::Internal(format!("F^(1/ε,1/ε) = {f} is not below ε = {eps}")));
    }
    let delta = if f > 0.0 { DEFAULT_DELTA.min((eps / f - 1.0) / 2.0) } else { DEFAULT_DELTA };
    let subsets = extract_large_subsets(left, right, c, 1.0 / eps, eps, delta)?;
    let kl = with_base(subsets.k_mu.clone(), left.base());
    let kr = with_base(subsets.k_nu.clone(), right.base());
    let window_defect = |s: &MeasuredSpace, keep: &[usize]| -> f64 {
        (0..s.len())
            .filter(|&i| !keep.contains(&i) && s.space.within(s.base(), i, 1.0 / eps))
            .map(|i| s.weight(i))
            .sum()
    };
    let defect_mu = window_defect(left, &kl);
    let defect_nu = window_defect(right, &kr);
    let hz = hz_scan(&g.host, &kl, &kr.iter().map(|&j| g.right_idx[j]).collect::<Vec<_>>()).value;
    let (mk, nk) = restricted_measures(&g, left, right, &kl, &kr);
    let flat_k = flat_bracket(&g.host, &mk, &nk, ftol)?.1;
    let three = flat_below(&g.host, &mk, &nk, 3.0 * eps)?;
    let pass = defect_mu < eps && defect_nu < eps && tol::le(hz, 2.0 * eps) && three;
    Ok(ForwardCertificate {
        subsets,
        flat_lr: f,
        delta,
        defect_mu,
        defect_nu,
        hz,
        flat_k,
        pmgh_upper: hz + flat_k,
        pass,
    })
}

fn restricted_measures(
    g: &super::coupling::Glued,
    left: &MeasuredSpace,
    right: &MeasuredSpace,
    kl: &[usize],
    kr: &[usize],
) -> (Vec<f64>, Vec<f64>) {
    let mut wl = vec![0.0; left.len()];
    for &i in kl {
        wl[i] = left.weight(i);
    }
    let mut wr = vec![0.0; right.len()];
    for &j in kr {
        wr[j] = right.weight(j);
    }
    g.measures(&wl, &wr)
}

/// The triangle argument: `F(μ, ν) ≤ r_μ + F(μ|K_μ, ν|K_ν) + r_ν`, all in the
/// host of `c`; under the hypothesis it yields `F(μ, ν) < 3ε`.
pub fn converse_direction(
    left: &MeasuredSpace,
    right: &MeasuredSpace,
    c: &Coupling,
    k_mu: &[usize],
    k_nu: &[usize],
    eps: f64,
    ftol: f64,
) -> Result<ConverseCertificate> {
    let kl = with_base(k_mu.to_vec(), left.base());
    let kr = with_base(k_nu.to_vec(), right.base());
    let r_mu = subset_flat_radius(left, &kl);
    let r_nu = subset_flat_radius(right, &kr);
    let g = c.glue(&left.space, &right.space);
    let (mu, nu) = g.measures(&left.weights(), &right.weights());
    let (mk, nk) = restricted_measures(&g, left, right, &kl, &kr);
    let flat_k = flat_bracket(&g.host, &mk, &nk, ftol)?.1;
    let flat_full = flat_bracket(&g.host, &mu, &nu, ftol)?.0;
    let bound = r_mu + flat_k + r_nu;
    let window_defect = |s: &MeasuredSpace, keep: &[usize]| -> f64 {
        (0..s.len())
            .filter(|&i| !keep.contains(&i) && s.space.within(s.base(), i, 1.0 / eps))
            .map(|i| s.weight(i))
            .sum()
    };
    let hypothesis = window_defect(left, &kl) < eps && window_defect(right, &kr) < eps && flat_below(&g.host, &mk, &nk, eps)?;
    let slack = 3.0 * ftol;
    let mut pass = flat_full <= bound.min(0.5) + slack;
    if hypothesis {
        pass &= flat_full < 3.0 * eps;
    }
    Ok(ConverseCertificate { r_mu, r_nu, flat_k, flat_full, bound, hypothesis, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::PointedSpace;

    fn measured(xs: &[f64], w: &[f64]) -> MeasuredSpace {
        MeasuredSpace::new(PointedSpace::line(xs, 0).unwrap(), w.to_vec()).unwrap()
    }

    fn identity(s: &MeasuredSpace) -> Coupling {
        let id: Vec<(usize, usize)> = (0..s.len()).map(|i| (i, i)).collect();
        Coupling::from_partial_map(&s.space, &s.space, &id).unwrap()
    }

    #[test]
    fn equal_measures_keep_everything() {
        let s = measured(&[0.0, 0.5, 1.0, 4.0], &[0.2, 0.3, 0.1, 0.4]);
        let p = extract_large_subsets(&s, &s, &identity(&s), 2.0, 0.25, DEFAULT_DELTA).unwrap();
        assert_eq!(p.k_mu, vec![0, 1, 2]);
        assert_eq!(p.k_nu, vec![0, 1, 2]);
        assert_eq!((p.mass_defect_mu, p.mass_defect_nu), (0.0, 0.0));
    }

    #[test]
    fn far_mass_is_carved() {
        // Both sides share the base atom; each has one private atom 0.6 from the other.
        let l = measured(&[0.0, 0.3], &[0.5, 0.05]);
        let r = measured(&[0.0, -0.3], &[0.5, 0.05]);
        let c = Coupling::ambient(&l.space, &r.space).unwrap_or_else(|_| Coupling::star(&l.space, &r.space));
        let p = extract_large_subsets(&l, &r, &c, 2.0, 0.1, DEFAULT_DELTA).unwrap();
        assert_eq!(p.k_mu, vec![0]);
        assert_eq!(p.k_nu, vec![0]);
        assert!((p.mass_defect_mu - 0.05).abs() < 1e-15);
        assert!(p.mass_defect_mu < (1.0 + DEFAULT_DELTA) * p.flat_lr);
    }

    #[test]
    fn r_not_above_eps_is_a_precondition_error() {
        let s = measured(&[0.0, 1.0], &[1.0, 1.0]);
        let e = extract_large_subsets(&s, &s, &identity(&s), 0.1, 0.1, DEFAULT_DELTA).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)));
    }

    #[test]
    fn subset_radius_steps() {
        let s = measured(&[0.0, 1.0, 4.0], &[1.0, 0.1, 0.2]);
        // Drop the atom at 4: mass 0.2 counts while 1/ρ ≥ 4, i.e. ρ ≤ 1/4.
        assert!((subset_flat_radius(&s, &[0, 1]) - 0.2).abs() < 1e-15);
        // Drop the atom at 1: mass 0.1 counts for ρ ≤ 1, so the infimum is 0.1.
        assert!((subset_flat_radius(&s, &[0, 2]) - 0.1).abs() < 1e-15);
        assert_eq!(subset_flat_radius(&s, &[0, 1, 2]), 0.0);
        // Heavy far atom: 0.5 counts only for ρ ≤ 1/4, so ρ just above 1/4 works.
        let h = measured(&[0.0, 4.0], &[1.0, 0.5]);
        assert!((subset_flat_radius(&h, &[0]) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn identical_sandwich_passes_at_zero() {
        let s = measured(&[0.0, 0.5, 1.0], &[0.2, 0.3, 0.5]);
        let rep = dstar_sandwich(&s, &s, 0.1, &Budget::default(), &[identity(&s)]).unwrap();
        let f = rep.forward.unwrap();
        assert!(f.pass);
        assert_eq!(f.pmgh_upper, 0.0);
        assert!(rep.converse.unwrap().pass);
    }
}
