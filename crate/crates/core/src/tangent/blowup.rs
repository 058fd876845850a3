//! Normalized dilations `T_r` and the model tangents they are compared with.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::space::{ball_with_ties, rescale, Cloud, MeasuredSpace, Norm, PointedSpace};

/// Default window radius in rescaled units.
pub const DEFAULT_WINDOW: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct BlowupSequence {
    pub point: usize,
    pub scales: Vec<f64>,
    pub window: f64,
    /// `T_r` restricted to `B(x, W)`, based at the image of `point`.
    pub blowups: Vec<MeasuredSpace>,
    /// Original indices kept in each blowup, in order.
    pub kept: Vec<Vec<usize>>,
    /// Original indices at distance exactly `W`.
    pub ties: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupSummary {
    pub scale: f64,
    pub atoms: usize,
    pub unit_ball_mass: f64,
    pub window_mass: f64,
    pub ties: usize,
}

impl BlowupSequence {
    pub fn summary(&self) -> Vec<BlowupSummary> {
        self.blowups
            .iter()
            .zip(&self.scales)
            .zip(&self.ties)
            .map(|((b, &scale), t)| BlowupSummary {
                scale,
                atoms: b.len(),
                unit_ball_mass: b.ball_mass(b.base(), 1.0).unwrap_or(f64::NAN),
                window_mass: b.total_mass(),
                ties: t.len(),
            })
            .collect()
    }
}

/// `T_r(μ, d, x)` for each scale, windowed to `B(x, W)`; `W = ∞` keeps everything.
pub fn blowup(s: &MeasuredSpace, point: usize, scales: &[f64], window: f64) -> Result<BlowupSequence> {
    s.space.check_index(point)?;
    if !(window > 0.0) {
        return domain(format!("window must be positive, got {window}"));
    }
    let based = s.with_base(point)?;
    let mut out = BlowupSequence { point, scales: scales.to_vec(), window, blowups: Vec::new(), kept: Vec::new(), ties: Vec::new() };
    for &r in scales {
        let t = rescale(&based, r).map_err(|e| match e {
            Error::DegenerateScale(m) => Error::DegenerateScale(format!("scale {r} at point {point}: {m}")),
            other => other,
        })?;
        let (keep, ties) = if window.is_finite() {
            let b = ball_with_ties(&t.space, point, window)?;
            (b.members, b.ties)
        } else {
            ((0..t.len()).collect(), Vec::new())
        };
        out.blowups.push(t.sub(&keep)?);
        out.kept.push(keep);
        out.ties.push(ties);
    }
    Ok(out)
}

/// Symmetric gauge on `ℝ^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "params")]
pub enum Gauge {
    /// `‖q‖ = max_j w_j |q_j|`.
    WeightedLinf(Vec<f64>),
    /// `‖q‖ = (Σ (q_j / a_j)²)^{1/2}`.
    Ellipse(Vec<f64>),
}

impl Gauge {
    fn params(&self) -> &[f64] {
        match self {
            Gauge::WeightedLinf(w) | Gauge::Ellipse(w) => w,
        }
    }
}

/// Lattice sample of `(ℝ^n, ‖·‖)` normalized so the unit ball has mass 1.
///
/// Atoms sit at cell centres of a grid that puts `2·resolution` cells across
/// the unit ball along every axis, plus a massless atom at the origin (the
/// base). Coordinates are returned in gauge units (`w_j q_j` or `q_j / a_j`),
/// so the cloud carries the sup or Euclidean norm and the gauge is an isometry
/// onto it. For weighted sup gauges `μ(B(0, k/resolution)) = (k/resolution)^n`
/// exactly.
pub fn model_tangent(gauge: &Gauge, n: usize, resolution: usize, window: f64) -> Result<MeasuredSpace> {
    let p = gauge.params();
    if n == 0 || p.len() != n || p.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
        return domain(format!("gauge needs {n} positive finite parameters, got {p:?}"));
    }
    if resolution == 0 || !(window >= 1.0 && window.is_finite()) {
        return domain("resolution must be positive and the window at least 1");
    }
    let norm = match gauge {
        Gauge::WeightedLinf(_) => Norm::Linf,
        Gauge::Ellipse(_) => Norm::L2,
    };
    let h = 1.0 / resolution as f64;
    let reach = (window * resolution as f64).ceil() as i64;
    let count = (2 * reach) as f64;
    if count.powi(n as i32) > 2e5 {
        return domain(format!("model with {} cells is too large", count.powi(n as i32)));
    }
    let mut pts = vec![vec![0.0; n]];
    let mut digits = vec![-reach; n];
    loop {
        let y: Vec<f64> = digits.iter().map(|&k| (k as f64 + 0.5) * h).collect();
        if norm.eval(&y) <= window * (1.0 + 1e-12) {
            pts.push(y);
        }
        let mut j = 0;
        while j < n {
            digits[j] += 1;
            if digits[j] < reach {
                break;
            }
            digits[j] = -reach;
            j += 1;
        }
        if j == n {
            break;
        }
    }
    let unit = pts[1..].iter().filter(|y| norm.eval(y) <= 1.0 + 1e-12).count();
    let mut w = vec![1.0 / unit as f64; pts.len()];
    w[0] = 0.0;
    let cloud = Cloud::new(n, norm, &pts)?;
    MeasuredSpace::new(PointedSpace::from_cloud(cloud, 0)?, w)
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingInheritance {
    pub point: usize,
    /// Largest `μ(B(y,2ρ))/μ(B(y,ρ))` on the original, `y ∈ B(x, W r)`, over the tested radii.
    pub measured: f64,
    /// Same ratio on every blowup, `y ∈ B(0, W)`.
    pub blowup_max: f64,
    /// `ν(B(0,2))` over the blowups.
    pub bracket_max: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Doubling ratio of the blowups against the original on matching radii.
///
/// Radii tested on a blowup at scale `r` are the dyadic `ρ ∈ [ρ_min, 1]`, which
/// are the radii `ρ r` of the original.
pub fn doubling_inheritance(s: &MeasuredSpace, point: usize, scales: &[f64], window: f64, rho_min: f64, slack: f64) -> Result<DoublingInheritance> {
    if !(rho_min > 0.0 && rho_min <= 1.0) {
        return domain("ρ_min must lie in (0, 1]");
    }
    let seq = blowup(s, point, scales, window)?;
    let mut rhos = vec![1.0];
    while rhos.last().unwrap() / 2.0 >= rho_min * (1.0 - 1e-12) {
        let next = rhos.last().unwrap() / 2.0;
        rhos.push(next);
    }
    let ratio = |m: &MeasuredSpace, y: usize, rho: f64| -> Result<f64> {
        let inner = m.ball_mass(y, rho)?;
        Ok(if inner > 0.0 { m.ball_mass(y, 2.0 * rho)? / inner } else { 0.0 })
    };
    let mut measured: f64 = 0.0;
    let mut blowup_max: f64 = 0.0;
    let mut bracket_max: f64 = 0.0;
    for (b, (&r, kept)) in seq.blowups.iter().zip(seq.scales.iter().zip(&seq.kept)) {
        let centres: Vec<usize> = (0..b.len()).filter(|&i| b.weight(i) > 0.0 || i == b.base()).collect();
        for &y in &centres {
            for &rho in &rhos {
                blowup_max = blowup_max.max(ratio(b, y, rho)?);
                measured = measured.max(ratio(s, kept[y], rho * r)?);
            }
        }
        bracket_max = bracket_max.max(b.ball_mass(b.base(), 2.0)?);
    }
    let pass = blowup_max <= measured * (1.0 + slack) && bracket_max <= measured * (1.0 + slack);
    Ok(DoublingInheritance { point, measured, blowup_max, bracket_max, slack, pass })
}
