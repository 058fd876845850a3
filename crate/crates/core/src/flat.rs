//! Bounded-Lipschitz flat metrics `F^{L,r}`, `F^L` and `F` on a common host.
//!
//! `F^{L,r}` is the LP `max Σ g_i (μ_i − ν_i)` over `|g| <= 1`, `L`-Lipschitz `g`
//! vanishing outside `B(base, r)`. Its dual is a transportation problem on the
//! in-ball atoms plus a ground node standing for the value 0, with the ground
//! cost `min(1, L · d(i, outside))` and metric closure through the ground. The
//! optimal witness is recovered as a c-transform of the sink potentials, which
//! makes it exactly feasible.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::flow::transport;
use crate::space::PointedSpace;

/// Points closer than this are merged into one transport node.
const MERGE: f64 = 1e-12;

/// Feasibility tolerance reported with every solution.
pub const FEAS_TOL: f64 = 1e-9;

/// Bisection tolerance for `F^L` and `F`.
pub const BISECT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct FlatProblem<'a> {
    pub host: &'a PointedSpace,
    pub mu: &'a [f64],
    pub nu: &'a [f64],
    pub l: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatSolution {
    pub value: f64,
    pub witness: Vec<f64>,
    pub active: Vec<usize>,
    /// Cost of the optimal transport plan; equals `value` up to `tolerance`.
    pub dual_cost: f64,
    pub tolerance: f64,
}

fn check_measures(host: &PointedSpace, mu: &[f64], nu: &[f64]) -> Result<()> {
    if mu.len() != host.len() || nu.len() != host.len() {
        return domain(format!(
            "measure lengths {} and {} do not match host size {}",
            mu.len(),
            nu.len(),
            host.len()
        ));
    }
    if mu.iter().chain(nu).any(|w| !(w.is_finite() && *w >= 0.0)) {
        return domain("measures must be finite and nonnegative");
    }
    Ok(())
}

pub fn flat_lr(p: &FlatProblem) -> Result<FlatSolution> {
    check_measures(p.host, p.mu, p.nu)?;
    if !(p.l > 0.0 && p.r > 0.0) {
        return domain(format!("need L > 0 and r > 0, got L = {}, r = {}", p.l, p.r));
    }
    let host = p.host;
    let n = host.len();
    let base = host.base();
    let mut inside = vec![false; n];
    let mut active = Vec::new();
    let mut outside = Vec::new();
    for i in 0..n {
        if host.within(base, i, p.r) {
            inside[i] = true;
            active.push(i);
        } else {
            outside.push(i);
        }
    }
    // Ground cost of each active atom.
    let ground: Vec<f64> = crate::par::map_slice(&active, |&i| {
        let dout = host.dist_to_set(i, &outside);
        (p.l * dout).min(1.0)
    });
    let mut ground_of = vec![0.0; n];
    for (k, &i) in active.iter().enumerate() {
        ground_of[i] = ground[k];
    }
    let closure = |i: usize, j: usize| (p.l * host.d(i, j)).min(ground_of[i] + ground_of[j]);

    // Merge coincident atoms and split into sources and sinks.
    let mut reps: Vec<usize> = Vec::new();
    let mut excess: Vec<f64> = Vec::new();
    for &i in &active {
        let b = p.mu[i] - p.nu[i];
        if b == 0.0 {
            continue;
        }
        match reps.iter().position(|&j| host.d(i, j) <= MERGE) {
            Some(k) => excess[k] += b,
            None => {
                reps.push(i);
                excess.push(b);
            }
        }
    }
    let scale: f64 = excess.iter().map(|b| b.abs()).sum();
    let tiny = 1e-15 * scale;
    // Sources/sinks as (host index or None for ground, amount).
    let mut src: Vec<(Option<usize>, f64)> = Vec::new();
    let mut snk: Vec<(Option<usize>, f64)> = Vec::new();
    let mut net = 0.0;
    for (&i, &b) in reps.iter().zip(&excess) {
        if b > tiny {
            src.push((Some(i), b));
            net += b;
        } else if b < -tiny {
            snk.push((Some(i), -b));
            net += b;
        }
    }
    if net > tiny {
        snk.push((None, net));
    } else if net < -tiny {
        src.push((None, -net));
    }
    let cost_between = |a: Option<usize>, b: Option<usize>| match (a, b) {
        (Some(i), Some(j)) => closure(i, j),
        (Some(i), None) | (None, Some(i)) => ground_of[i],
        (None, None) => 0.0,
    };
    let supply: Vec<f64> = src.iter().map(|s| s.1).collect();
    let demand: Vec<f64> = snk.iter().map(|s| s.1).collect();
    let plan = transport(&supply, &demand, &|s, t| cost_between(src[s].0, snk[t].0))?;

    // c-transform: φ(k) = min_t c*(k, t) − v_t, shifted so the ground is 0.
    let v = &plan.sink_potential;
    let phi = |k: Option<usize>| -> f64 {
        snk.iter()
            .zip(v)
            .map(|(t, vt)| cost_between(k, t.0) - vt)
            .fold(f64::INFINITY, f64::min)
    };
    let mut witness = vec![0.0; n];
    if !snk.is_empty() {
        let phi0 = phi(None);
        let vals = crate::par::map_slice(&active, |&i| (phi(Some(i)) - phi0).clamp(-1.0, 1.0));
        for (&i, g) in active.iter().zip(vals) {
            witness[i] = g;
        }
    }
    let value: f64 = active.iter().map(|&i| witness[i] * (p.mu[i] - p.nu[i])).sum();
    let slack = FEAS_TOL * (1.0 + scale);
    if (value - plan.cost).abs() > slack {
        return Err(Error::Solver(format!(
            "duality gap {} exceeds tolerance (primal {value}, dual {})",
            (value - plan.cost).abs(),
            plan.cost
        )));
    }
    Ok(FlatSolution { value, witness, active, dual_cost: plan.cost, tolerance: FEAS_TOL })
}

/// Value of `F^{L,r}` only.
pub fn flat_lr_value(host: &PointedSpace, mu: &[f64], nu: &[f64], l: f64, r: f64) -> Result<f64> {
    Ok(flat_lr(&FlatProblem { host, mu, nu, l, r })?.value)
}

/// `inf{ε ∈ (0, 1/2) : pred(ε)}` for an upward-closed predicate, to `tol`.
fn bisect(tol: f64, pred: impl FnMut(f64) -> Result<bool>) -> Result<f64> {
    Ok(bracket(tol, pred)?.1)
}

/// `(lo, hi)` with the infimum in `[lo, hi]` and `hi - lo <= tol`.
fn bracket(tol: f64, mut pred: impl FnMut(f64) -> Result<bool>) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

fn identical(mu: &[f64], nu: &[f64]) -> bool {
    mu == nu
}

/// `F^L`: infimum of `ε` with `F^{L,1/ε} < ε`, capped at 1/2.
pub fn flat_l(host: &PointedSpace, mu: &[f64], nu: &[f64], l: f64) -> Result<f64> {
    check_measures(host, mu, nu)?;
    if !(l > 0.0) {
        return domain(format!("need L > 0, got {l}"));
    }
    if identical(mu, nu) {
        return Ok(0.0);
    }
    bisect(BISECT_TOL, |e| Ok(flat_lr_value(host, mu, nu, l, 1.0 / e)? < e))
}

/// `F`: infimum of `ε` with `F^{1/ε,1/ε} < ε`, capped at 1/2.
pub fn flat(host: &PointedSpace, mu: &[f64], nu: &[f64]) -> Result<f64> {
    flat_tol(host, mu, nu, BISECT_TOL)
}

/// `F` with a caller-chosen bisection tolerance. The result is an upper bound
/// within `tol` of the infimum.
pub fn flat_tol(host: &PointedSpace, mu: &[f64], nu: &[f64], tol: f64) -> Result<f64> {
    check_measures(host, mu, nu)?;
    if identical(mu, nu) {
        return Ok(0.0);
    }
    bisect(tol, |e| Ok(flat_lr_value(host, mu, nu, 1.0 / e, 1.0 / e)? < e))
}

/// Bracket `(lo, hi)` around `F`: `lo` is a certified lower bound, `hi` an upper one.
pub fn flat_bracket(host: &PointedSpace, mu: &[f64], nu: &[f64], tol: f64) -> Result<(f64, f64)> {
    check_measures(host, mu, nu)?;
    if identical(mu, nu) {
        return Ok((0.0, 0.0));
    }
    bracket(tol, |e| Ok(flat_lr_value(host, mu, nu, 1.0 / e, 1.0 / e)? < e))
}

/// Whether `F < eps` holds, i.e. some `ε' < eps` has `F^{1/ε',1/ε'} < ε'`.
/// Checked at `eps` itself minus a relative hair, which suffices because the
/// predicate is upward closed.
pub fn flat_below(host: &PointedSpace, mu: &[f64], nu: &[f64], eps: f64) -> Result<bool> {
    check_measures(host, mu, nu)?;
    if identical(mu, nu) {
        return Ok(eps > 0.0);
    }
    let e = eps * (1.0 - 1e-9);
    if !(e > 0.0) {
        return Ok(false);
    }
    Ok(flat_lr_value(host, mu, nu, 1.0 / e, 1.0 / e)? < e)
}
