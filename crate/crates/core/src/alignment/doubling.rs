//! Distance to a large subset of a doubling space.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flat::flat;
use crate::hausdorff::hz_scan;
use crate::space::MeasuredSpace;
use crate::tol;

#[derive(Debug, Clone, Serialize)]
pub struct DoublingBound {
    /// `μ(B(x, 2R) ∖ S)`.
    pub eps: f64,
    /// `4R(ε/δ)^{1/k} + ε`.
    pub bound: f64,
    /// Whether `R > (4R(ε/δ)^{1/k})^{-1}` holds.
    pub ref_bound_holds: bool,
    pub ball_mass: f64,
    /// `H_x(X, S ∪ {x})` and `F_x(μ, μ|S)` in the identity coupling.
    pub hz_identity: f64,
    pub flat_identity: f64,
    pub identity_upper: f64,
    /// Dyadic radii at which the doubling ratio was checked.
    pub scales: Vec<f64>,
}

/// Bound `d_pmGH((X, μ, x), (S, μ|S, x))` for a `2^k`-doubling space.
///
/// Doubling is verified on balls centred in `B(x, 2R)` at dyadic radii from
/// `2R` down to a quarter of the bound. Finite spaces are never doubling at
/// every scale, so only the scales the estimate uses are tested.
pub fn doubling_subset_bound(s: &MeasuredSpace, subset: &[usize], r: f64, delta: f64, k: f64) -> Result<DoublingBound> {
    if !(delta > 0.0 && delta < 1.0) || !(k >= 1.0) || !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("need 0 < δ < 1, k ≥ 1 and R > 0; got δ = {delta}, k = {k}, R = {r}")));
    }
    s.space.check_indices(subset)?;
    let x = s.base();
    let mut in_s = vec![false; s.len()];
    for &i in subset {
        in_s[i] = true;
    }
    let eps: f64 = (0..s.len()).filter(|&i| !in_s[i] && s.space.within(x, i, 2.0 * r)).map(|i| s.weight(i)).sum();
    if !(eps < 0.5) {
        return Err(Error::Precondition(format!("missing mass {eps} must be below 1/2")));
    }
    let ball_mass = s.ball_mass(x, r)?;
    if ball_mass < delta {
        return Err(Error::Inapplicable(format!("μ(B(x, {r})) = {ball_mass} is below δ = {delta}")));
    }
    let spread = 4.0 * r * (eps / delta).powf(1.0 / k);
    let bound = spread + eps;
    let ref_bound_holds = spread > 0.0 && r > 1.0 / spread;

    let centers = s.ball(x, 2.0 * r)?;
    let min_gap = centers
        .iter()
        .flat_map(|&a| centers.iter().map(move |&b| (a, b)))
        .map(|(a, b)| s.space.d(a, b))
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = (bound / 4.0).max(if min_gap.is_finite() { min_gap } else { 2.0 * r });
    let ratio = 2f64.powf(k);
    let mut scales = Vec::new();
    let mut big = 2.0 * r;
    while big / 2.0 >= floor && scales.len() < 64 {
        let small = big / 2.0;
        for &w in &centers {
            let outer = s.ball_mass(w, big)?;
            let inner = s.ball_mass(w, small)?;
            if !tol::le(outer, ratio * inner) {
                return Err(Error::Inapplicable(format!(
                    "μ(B({w}, {big})) = {outer} exceeds 2^k · μ(B({w}, {small})) = {}",
                    ratio * inner
                )));
            }
        }
        scales.push(small);
        big = small;
    }

    let mut right: Vec<usize> = subset.to_vec();
    if !in_s[x] {
        right.push(x);
    }
    let all: Vec<usize> = (0..s.len()).collect();
    let hz_identity = hz_scan(&s.space, &all, &right).value;
    let mu = s.weights();
    let mu_s: Vec<f64> = mu.iter().zip(&in_s).map(|(&w, &k)| if k { w } else { 0.0 }).collect();
    let flat_identity = flat(&s.space, &mu, &mu_s)?;
    let identity_upper = hz_identity + flat_identity;
    if identity_upper > bound + 1e-6 {
        return Err(Error::Certificate(format!(
            "identity coupling gives {identity_upper}, above the doubling bound {bound}"
        )));
    }
    Ok(DoublingBound { eps, bound, ref_bound_holds, ball_mass, hz_identity, flat_identity, identity_upper, scales })
}
