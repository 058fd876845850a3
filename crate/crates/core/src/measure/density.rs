//! Ball-mass ratios over a window of scales.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::par;
use crate::space::MeasuredSpace;

#[derive(Debug, Clone, Serialize)]
pub struct DensityProfile {
    pub point: usize,
    pub dim: f64,
    pub scales: Vec<f64>,
    pub masses: Vec<f64>,
    /// `μ(B(x, r)) / r^s`.
    pub ratio_r: Vec<f64>,
    /// `μ(B(x, r)) / (2r)^s`.
    pub ratio_2r: Vec<f64>,
    /// Window minimum and maximum of `ratio_2r`, standing in for the lower and
    /// upper densities.
    pub min_2r: f64,
    pub max_2r: f64,
    pub min_r: f64,
    pub max_r: f64,
}

fn check_scales(scales: &[f64]) -> Result<()> {
    if scales.is_empty() {
        return domain("need at least one scale");
    }
    if let Some(r) = scales.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return domain(format!("radius {r} must be positive and finite"));
    }
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return domain("scales must be strictly descending");
    }
    Ok(())
}

pub fn density_profile(s: &MeasuredSpace, point: usize, scales: &[f64], dim: f64) -> Result<DensityProfile> {
    check_scales(scales)?;
    s.space.check_index(point)?;
    if !(dim >= 0.0 && dim.is_finite()) {
        return domain(format!("dimension {dim} must be finite and non-negative"));
    }
    let masses = scales.iter().map(|&r| s.ball_mass(point, r)).collect::<Result<Vec<_>>>()?;
    let two = 2f64.powf(dim);
    let ratio_r: Vec<f64> = masses.iter().zip(scales).map(|(m, r)| m / r.powf(dim)).collect();
    let ratio_2r: Vec<f64> = ratio_r.iter().map(|v| v / two).collect();
    let (min_r, max_r) = min_max(&ratio_r);
    let (min_2r, max_2r) = min_max(&ratio_2r);
    Ok(DensityProfile { point, dim, scales: scales.to_vec(), masses, ratio_r, ratio_2r, min_2r, max_2r, min_r, max_r })
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingRecord {
    pub point: usize,
    pub r: f64,
    pub inner: f64,
    pub outer: f64,
    /// `μ(B(x, 2r)) / μ(B(x, r))`; absent when the inner ball has no mass.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointMax {
    pub point: usize,
    /// `None` when some inner ball at this point has no mass.
    pub max: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingScan {
    pub scales: Vec<f64>,
    pub records: Vec<DoublingRecord>,
    pub per_point: Vec<PointMax>,
    /// Largest ratio over all records; `None` if any record is non-doubling.
    pub max: Option<f64>,
    pub non_doubling: usize,
}

/// Doubling ratios at every support point and scale.
pub fn doubling_scan(s: &MeasuredSpace, scales: &[f64]) -> Result<DoublingScan> {
    check_scales(scales)?;
    let support = s.support();
    let rows: Vec<Result<Vec<DoublingRecord>>> = par::map_slice(&support, |&x| {
        scales
            .iter()
            .map(|&r| {
                let inner = s.ball_mass(x, r)?;
                let outer = s.ball_mass(x, 2.0 * r)?;
                let ratio = (inner > 0.0).then(|| outer / inner);
                Ok(DoublingRecord { point: x, r, inner, outer, ratio })
            })
            .collect()
    });
    let mut records = Vec::with_capacity(support.len() * scales.len());
    let mut per_point = Vec::with_capacity(support.len());
    for (row, &x) in rows.into_iter().zip(&support) {
        let row = row?;
        let max = row.iter().try_fold(0.0f64, |m, rec| rec.ratio.map(|v| m.max(v)));
        per_point.push(PointMax { point: x, max });
        records.extend(row);
    }
    let non_doubling = records.iter().filter(|r| r.ratio.is_none()).count();
    let max = per_point.iter().try_fold(0.0f64, |m, p| p.max.map(|v| m.max(v)));
    Ok(DoublingScan { scales: scales.to_vec(), records, per_point, max, non_doubling })
}
