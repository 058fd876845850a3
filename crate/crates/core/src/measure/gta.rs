//! Checking good tangential approximation on finite data.

use serde::Serialize;

use super::model::{bilip_model_fit, ModelFit};
use crate::alignment::Budget;
use crate::error::{domain, Result};
use crate::par;
use crate::space::MeasuredSpace;
use crate::tol;

#[derive(Debug, Clone, Serialize)]
pub struct GtaParams {
    pub eta: f64,
    pub k: f64,
    pub delta: f64,
    pub r0: f64,
    /// Dimension `n` of the model `ℓ∞^n`.
    pub n: usize,
    /// Model grid resolution per unit length.
    pub grid_res: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityRecord {
    pub point: usize,
    pub r: f64,
    pub mass: f64,
    pub required: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxRecord {
    pub point: usize,
    pub r: f64,
    /// The chosen `C′ ⊂ B(x, r) ∩ C`, containing `x`.
    pub subset: Vec<usize>,
    /// `μ(B(x, r) ∖ C′)` and the allowance `η(δr)^n`.
    pub defect: f64,
    pub allowed: f64,
    pub threshold: f64,
    pub fit: ModelFit,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GtaReport {
    pub params: GtaParams,
    pub scales: Vec<f64>,
    pub density: Vec<DensityRecord>,
    pub approx: Vec<ApproxRecord>,
    /// Smallest `μ(B(x, r)) / r^n` over the density records.
    pub min_density_ratio: f64,
    pub density_pass: bool,
    pub approx_pass: bool,
    pub g_empty: bool,
    pub pass: bool,
}

impl GtaReport {
    pub fn failures(&self) -> (Vec<&DensityRecord>, Vec<&ApproxRecord>) {
        (self.density.iter().filter(|r| !r.pass).collect(), self.approx.iter().filter(|r| !r.pass).collect())
    }
}

fn check_params(p: &GtaParams, scales: &[f64]) -> Result<()> {
    if !(p.eta > 0.0 && p.eta.is_finite()) || !(p.r0 > 0.0 && p.r0.is_finite()) {
        return domain("η and R0 must be positive and finite");
    }
    if !(p.k >= 1.0 && p.k.is_finite()) {
        return domain(format!("K = {} must be at least 1", p.k));
    }
    if !(p.delta > 0.0 && p.delta < 0.5) {
        return domain(format!("δ = {} must lie in (0, 1/2)", p.delta));
    }
    if scales.is_empty() || scales.iter().any(|&r| !(r > 0.0 && r <= p.r0)) {
        return domain("scales must be non-empty and lie in (0, R0]");
    }
    Ok(())
}

/// Verify both items of good tangential approximation for `G ⊆ C ⊆ X` on a
/// grid of scales, with the weights of `x` playing the role of `H^n`.
///
/// Item 2 compares `(C′, d/r, x)` with the unit ball of the model at the same
/// scale. `C′` is grown from `x` in order of distance to the fitted chart's
/// image: points within the model's grid slack of the image always go in,
/// the rest only until the mass defect falls below `η(δr)^n`.
pub fn verify_gta(
    x: &MeasuredSpace,
    c: &[usize],
    g: &[usize],
    params: &GtaParams,
    scales: &[f64],
    budget: &Budget,
) -> Result<GtaReport> {
    check_params(params, scales)?;
    x.space.check_indices(c)?;
    x.space.check_indices(g)?;
    let mut in_c = vec![false; x.len()];
    for &i in c {
        in_c[i] = true;
    }
    if let Some(&i) = g.iter().find(|&&i| !in_c[i]) {
        return domain(format!("G is not contained in C: point {i}"));
    }
    let n = params.n as i32;

    let jobs: Vec<(usize, f64)> = c.iter().flat_map(|&p| scales.iter().map(move |&r| (p, r))).collect();
    let density = par::map_slice(&jobs, |&(p, r)| {
        let mass = x.ball_mass(p, r)?;
        let required = params.eta * r.powi(n);
        Ok(DensityRecord { point: p, r, mass, required, pass: tol::le(required, mass) })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let min_density_ratio =
        density.iter().map(|d| d.mass / d.r.powi(n)).fold(f64::INFINITY, f64::min);

    let jobs: Vec<(usize, f64)> = g.iter().flat_map(|&p| scales.iter().map(move |&r| (p, r))).collect();
    let approx = par::map_slice(&jobs, |&(p, r)| approx_record(x, &in_c, p, r, params, budget))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let density_pass = density.iter().all(|d| d.pass);
    let approx_pass = approx.iter().all(|a| a.pass);
    Ok(GtaReport {
        params: params.clone(),
        scales: scales.to_vec(),
        density,
        approx,
        min_density_ratio,
        density_pass,
        approx_pass,
        g_empty: g.is_empty(),
        pass: density_pass && approx_pass,
    })
}

fn approx_record(x: &MeasuredSpace, in_c: &[bool], p: usize, r: f64, params: &GtaParams, budget: &Budget) -> Result<ApproxRecord> {
    let ball = x.ball(p, r)?;
    let ball_mass = x.mass_of(ball.iter().copied());
    let allowed = params.eta * (params.delta * r).powi(params.n as i32);
    let threshold = params.delta.min(1.0 / (params.k * (1.0 + 2.0 * params.delta)));
    let fit_on = |set: &[usize]| -> Result<ModelFit> {
        let mut idx = set.to_vec();
        idx.sort_unstable();
        let local = x.space.with_base(p)?.sub(&idx)?.0.scaled(r)?;
        bilip_model_fit(&local, params.k, params.n, params.grid_res, budget)
    };

    let pool: Vec<usize> = ball.iter().copied().filter(|&i| in_c[i]).collect();
    let first = fit_on(&pool)?;
    let mut sorted_pool = pool.clone();
    sorted_pool.sort_unstable();
    // Chart images are indices into the sorted pool.
    let images: Vec<usize> = first.chart.iter().map(|c| sorted_pool[c.image]).collect();
    let score = |i: usize| images.iter().map(|&j| x.space.d(i, j)).fold(f64::INFINITY, f64::min);
    let mut order: Vec<(f64, f64, usize)> =
        pool.iter().filter(|&&i| i != p).map(|&i| (score(i), x.space.d(p, i), i)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut subset = vec![p];
    let mut kept = x.weight(p);
    let well_fitted = first.sample_slack * r;
    for &(sc, _, i) in &order {
        if sc > well_fitted && ball_mass - kept < allowed {
            break;
        }
        subset.push(i);
        kept += x.weight(i);
    }
    subset.sort_unstable();
    let defect = (ball_mass - kept).max(0.0);
    let fit = if subset.len() == pool.len() { first } else { fit_on(&subset)? };
    let pass = defect < allowed && fit.upper < threshold;
    Ok(ApproxRecord { point: p, r, subset, defect, allowed, threshold, fit, pass })
}
