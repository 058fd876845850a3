//! Fitting a bi-Lipschitz image of `ℓ∞^n` to a rescaled local space.

use serde::Serialize;

use crate::alignment::{coupling_hz, estimate_dpgh, Budget, Coupling, Method};
use crate::error::{domain, Result};
use crate::space::{Cloud, Norm, PointedSpace};

/// Largest model sample the fit will build.
pub const MODEL_MAX: usize = 20_000;

#[derive(Debug, Clone, Serialize)]
pub struct ChartPoint {
    pub q: Vec<f64>,
    pub image: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelFit {
    pub n: usize,
    pub k: f64,
    pub grid_res: usize,
    /// Lower bound on the distance to the fitted model ball (not to the class).
    pub lower: f64,
    /// Certified upper bound on the distance to the unit ball of a member of `biLip(K)`.
    pub upper: f64,
    /// Best coupling value against the finite model sample.
    pub sample_upper: f64,
    /// Covering radius of the sample inside the model ball.
    pub sample_slack: f64,
    pub chart: Vec<ChartPoint>,
    /// Smallest `δ` with `|q−q'|/K − δ ≤ d(ξq, ξq') ≤ K|q−q'| + δ` on the chart.
    pub chart_distortion: f64,
    pub method: Method,
    pub inconclusive: bool,
    pub note: Option<String>,
}

/// Grid of spacing `1/grid_res` on `[-1, 1]^n` in `ℓ∞^n`, based at the origin.
pub fn model_sample(n: usize, grid_res: usize) -> Result<(PointedSpace, Vec<Vec<f64>>)> {
    if n == 0 || grid_res == 0 {
        return domain("model dimension and grid resolution must be positive");
    }
    let side = 2 * grid_res + 1;
    let count = (side as f64).powi(n as i32);
    if count > MODEL_MAX as f64 {
        return domain(format!("model sample of {count} points exceeds {MODEL_MAX}"));
    }
    let h = 1.0 / grid_res as f64;
    let mut pts = Vec::with_capacity(count as usize);
    let mut digits = vec![0usize; n];
    loop {
        pts.push(digits.iter().map(|&d| (d as f64 - grid_res as f64) * h).collect::<Vec<f64>>());
        let mut c = 0;
        while c < n {
            digits[c] += 1;
            if digits[c] < side {
                break;
            }
            digits[c] = 0;
            c += 1;
        }
        if c == n {
            break;
        }
    }
    let base = pts.iter().position(|p| p.iter().all(|&x| x == 0.0)).expect("origin on grid");
    let space = PointedSpace::from_cloud(Cloud::new(n, Norm::Linf, &pts)?, base)?;
    Ok((space, pts))
}

/// Near-bi-Lipschitz defect of a chart under constant `k`.
pub fn chart_distortion(local: &PointedSpace, chart: &[ChartPoint], k: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, p) in chart.iter().enumerate() {
        for b in &chart[a + 1..] {
            let dq = Norm::Linf.dist(&p.q, &b.q);
            let d = local.d(p.image, b.image);
            worst = worst.max(dq / k - d).max(d - k * dq);
        }
    }
    worst
}

/// Compare `(local, base)` at unit scale with the unit ball of `ℓ∞^n`.
///
/// The model ball is sampled on a grid; the certified bound adds the grid's
/// covering radius. Candidate charts come from ambient coordinates when the
/// local space has them in `ℓ∞^n`, and from the alignment estimator.
pub fn bilip_model_fit(local: &PointedSpace, k: f64, n: usize, grid_res: usize, budget: &Budget) -> Result<ModelFit> {
    if !(k >= 1.0 && k.is_finite()) {
        return domain(format!("bi-Lipschitz constant {k} must be at least 1"));
    }
    let (model, pts) = model_sample(n, grid_res)?;
    let slack = 0.5 / grid_res as f64;

    let est = estimate_dpgh(&model, local, budget)?;
    let mut best = (est.upper, est.witness_upper.clone());
    let ambient = local.cloud().is_some_and(|c| c.dim == n && c.norm == Norm::Linf);
    if ambient {
        let c = Coupling::ambient(&model, local)?;
        let v = coupling_hz(&model, local, &c);
        if v < best.0 {
            best = (v, c);
        }
    }
    let (sample_upper, witness) = best;
    let chart: Vec<ChartPoint> = pts
        .iter()
        .enumerate()
        .map(|(a, q)| {
            let image = (0..local.len())
                .min_by(|&s, &t| witness.get(a, s).total_cmp(&witness.get(a, t)).then(s.cmp(&t)))
                .expect("local space is non-empty");
            ChartPoint { q: q.clone(), image }
        })
        .collect();
    let distortion = chart_distortion(local, &chart, k);
    let upper = (sample_upper + slack).min(0.5);
    let lower = (est.lower - slack).max(0.0).min(upper);
    let note = est
        .inconclusive
        .then(|| "alignment budget exhausted; the interval is the widest certified one".to_string());
    Ok(ModelFit {
        n,
        k,
        grid_res,
        lower,
        upper,
        sample_upper,
        sample_slack: slack,
        chart,
        chart_distortion: distortion,
        method: est.method,
        inconclusive: est.inconclusive,
        note,
    })
}
