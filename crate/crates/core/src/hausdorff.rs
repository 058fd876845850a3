//! The pointed local Hausdorff distance `H_z` inside a common host.
//!
//! Feasibility of `ε` means `X ∩ B(z, 1/ε) ⊂ B(Y, ε)` and the same with `X`, `Y`
//! swapped. It is upward closed and only changes at finitely many critical
//! values, so the infimum is found exactly by testing one point per gap.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::space::PointedSpace;

/// `B(S, r) = {i : d(i, S) <= r}`.
pub fn neighborhood(host: &PointedSpace, set: &[usize], r: f64) -> Result<Vec<usize>> {
    if set.is_empty() {
        return domain("neighborhood of an empty set");
    }
    if !(r >= 0.0) {
        return domain(format!("negative radius {r}"));
    }
    host.check_indices(set)?;
    Ok((0..host.len())
        .filter(|&i| set.iter().any(|&s| host.within(i, s, r)))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct HzResult {
    pub value: f64,
    /// Sorted critical values in `(0, 1/2)` where feasibility may change.
    pub critical_eps: Vec<f64>,
}

/// `H_z(left, right)` for nonempty index sets of `host`, where `z` is the host base.
pub fn local_hausdorff(host: &PointedSpace, left: &[usize], right: &[usize]) -> Result<HzResult> {
    if left.is_empty() || right.is_empty() {
        return domain("local Hausdorff distance needs two nonempty sets");
    }
    host.check_indices(left)?;
    host.check_indices(right)?;
    Ok(hz_scan(host, left, right))
}

/// Same as [`local_hausdorff`] but an empty side is allowed: it contributes
/// nothing and forces the other side out of the window.
pub fn hz_scan(host: &PointedSpace, left: &[usize], right: &[usize]) -> HzResult {
    let z = host.base();
    // (distance from z, distance to the other set) per point.
    let side = |a: &[usize], b: &[usize]| -> Vec<(f64, f64)> {
        a.iter().map(|&i| (host.d(z, i), host.dist_to_set(i, b))).collect()
    };
    let pts: Vec<(f64, f64)> = side(left, right).into_iter().chain(side(right, left)).collect();
    hz_from_profile(&pts)
}

/// Exact scan given `(d(z, a), d(a, other side))` for every point of both sides.
pub fn hz_from_profile(pts: &[(f64, f64)]) -> HzResult {
    let mut crit: Vec<f64> = Vec::with_capacity(2 * pts.len());
    for &(dz, dy) in pts {
        if dy > 0.0 && dy < 0.5 {
            crit.push(dy);
        }
        if dz > 0.0 {
            let c = 1.0 / dz;
            if c < 0.5 {
                crit.push(c);
            }
        }
    }
    crit.sort_by(f64::total_cmp);
    crit.dedup();
    let feasible = |e: f64| pts.iter().all(|&(dz, dy)| dz > 1.0 / e || dy <= e);
    let mut lo = 0.0;
    let mut value = 0.5;
    for &c in crit.iter().chain(std::iter::once(&0.5)) {
        if feasible(0.5 * (lo + c)) {
            value = lo;
            break;
        }
        lo = c;
    }
    HzResult { value, critical_eps: crit }
}

/// Whether `ε` itself is feasible (closed balls on both sides).
pub fn hz_feasible(host: &PointedSpace, left: &[usize], right: &[usize], eps: f64) -> bool {
    let z = host.base();
    let ok = |a: &[usize], b: &[usize]| {
        a.iter().all(|&i| !host.within(z, i, 1.0 / eps) || b.iter().any(|&j| host.within(i, j, eps)))
    };
    ok(left, right) && ok(right, left)
}
