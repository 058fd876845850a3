//! Flatness scores of blowups against fitted norm models, and the
//! rectifiable-versus-unrectifiable separation built on them.

use std::collections::BTreeMap;

use serde::Serialize;

use super::blowup::blowup;
use super::fixtures::{Fixture, FixtureKind};
use crate::alignment::{estimate_dstar, Budget, Method};
use crate::error::{domain, Result};
use crate::par;
use crate::space::{Cloud, MeasuredSpace, Norm, PointedSpace};

#[derive(Debug, Clone, Serialize)]
pub struct ScanParams {
    /// Window radius of the compared blowups, in rescaled units.
    pub window: f64,
    /// Lattice cells per unit length used to sample blowups and models.
    pub resolution: usize,
    /// Degree of the polynomial chart tried for curves; 0 disables charts.
    pub chart_degree: usize,
    pub budget: Budget,
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            window: 1.0,
            resolution: 1,
            chart_degree: 2,
            budget: Budget { nodes: 20_000, map_limit: 8, restarts: 2, local_steps: 0, flat_tol: 1e-4, ..Budget::default() },
        }
    }
}

/// Scales of the default separation sweep. The finest one keeps about twelve
/// plane-patch atoms per radius, below which sampling noise swamps the scores.
pub const SEPARATION_SCALES: [f64; 2] = [0.25, 0.125];

#[derive(Debug, Clone, Serialize)]
pub struct FlatnessRecord {
    pub point: usize,
    pub scale: f64,
    pub lower: f64,
    pub upper: f64,
    /// Window mass times half a lattice cell: the sampling error of the blowup.
    pub sampling_slack: f64,
    pub atoms: usize,
    pub model_atoms: usize,
    /// Fitted tangent directions, one column per parameter axis.
    pub frame: Vec<Vec<f64>>,
    pub model: Option<ModelKind>,
    /// Polynomial coefficients of the chart model per host axis, empty for the norm model.
    pub chart: Vec<Vec<f64>>,
    /// Stretch bound of the model parametrization.
    pub fitted_k: Option<f64>,
    pub method: Option<Method>,
    pub inconclusive: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub point: usize,
    pub worst_upper: Option<f64>,
    /// Finest-scale upper minus coarsest-scale upper.
    pub trend: Option<f64>,
    /// Upper scores never increase as the scale shrinks.
    pub decreasing: bool,
    pub failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatnessReport {
    pub n: usize,
    pub scales: Vec<f64>,
    pub params: ScanParams,
    pub records: Vec<FlatnessRecord>,
    pub points: Vec<PointSummary>,
}

/// Symmetric eigenpairs by cyclic Jacobi, sorted by decreasing eigenvalue.
fn eigen(mut a: Vec<Vec<f64>>) -> Vec<(f64, Vec<f64>)> {
    let d = a.len();
    let mut v: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| (i == j) as u8 as f64).collect()).collect();
    for _ in 0..64 {
        let off: f64 = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut out: Vec<(f64, Vec<f64>)> = (0..d).map(|j| (a[j][j], v.iter().map(|r| r[j]).collect())).collect();
    out.sort_by(|x, y| y.0.total_cmp(&x.0));
    out
}

/// Spread mass `m` at offset `y` over the surrounding lattice nodes with
/// multilinear weights, so ties split evenly and first moments are kept.
fn deposit(cells: &mut BTreeMap<Vec<i64>, f64>, y: &[f64], res: usize, m: f64) {
    let scaled: Vec<f64> = y.iter().map(|&x| x * res as f64).collect();
    let lo: Vec<i64> = scaled.iter().map(|x| x.floor() as i64).collect();
    let frac: Vec<f64> = scaled.iter().zip(&lo).map(|(x, &l)| x - l as f64).collect();
    for corner in 0..1u32 << y.len() {
        let mut w = m;
        let key: Vec<i64> = (0..y.len())
            .map(|a| {
                let up = corner >> a & 1 == 1;
                w *= if up { frac[a] } else { 1.0 - frac[a] };
                lo[a] + up as i64
            })
            .collect();
        if w > 0.0 {
            *cells.entry(key).or_insert(0.0) += w;
        }
    }
}

fn lattice_space(cells: &BTreeMap<Vec<i64>, f64>, dim: usize, res: usize, norm: Norm) -> Result<MeasuredSpace> {
    let zero = vec![0i64; dim];
    let mut pts = vec![vec![0.0; dim]];
    let mut w = vec![cells.get(&zero).copied().unwrap_or(0.0)];
    for (k, &m) in cells {
        if *k != zero {
            pts.push(k.iter().map(|&x| x as f64 / res as f64).collect());
            w.push(m);
        }
    }
    let cloud = Cloud::new(dim, norm, &pts)?;
    MeasuredSpace::new(PointedSpace::from_cloud(cloud, 0)?, w)
}

/// Which model family produced a record's score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// The fitted plane with its induced norm.
    Norm,
    /// A polynomial bi-Lipschitz chart over the fitted line.
    Chart,
}

/// A parametrized model surface `q ↦ A q + Σ_k c_k q^k` (the polynomial
/// correction exists only for curves, `n = 1`).
struct Chart {
    frame: Vec<Vec<f64>>,
    /// `coef[a][k-1]` multiplies `t^k` in host coordinate `a`.
    coef: Vec<Vec<f64>>,
}

impl Chart {
    fn at(&self, q: &[f64]) -> Vec<f64> {
        self.frame
            .iter()
            .enumerate()
            .map(|(a, row)| {
                let flat: f64 = row.iter().zip(q).map(|(x, y)| x * y).sum();
                let poly = self.coef.get(a).map_or(0.0, |c| c.iter().rev().fold(0.0, |acc, k| (acc + k) * q[0]));
                flat + poly
            })
            .collect()
    }

    fn speed(&self, q: &[f64], norm: Norm) -> f64 {
        if self.coef.is_empty() {
            return 1.0;
        }
        let d: Vec<f64> = self
            .frame
            .iter()
            .zip(&self.coef)
            .map(|(row, c)| row[0] + c.iter().enumerate().rev().fold(0.0, |acc, (k, ck)| acc * q[0] + (k + 1) as f64 * ck))
            .collect();
        norm.eval(&d)
    }
}

/// Sample the chart's `H^n` on the window, deposit it on the lattice and
/// normalize so the unit ball has mass 1. Returns the model and its stretch bound.
fn chart_model(chart: &Chart, n: usize, dim: usize, p: &ScanParams, norm: Norm) -> Result<(MeasuredSpace, f64)> {
    // About 2^16 parameter samples whatever the dimension, and at least 8 per lattice cell.
    let res = p.resolution;
    let fine = (8.0 * res as f64).max((65536f64.powf(1.0 / n as f64) / (4.0 * p.window)).floor());
    let reach = (2.0 * p.window * fine).ceil() as i64;
    let vol = (1.0 / fine).powi(n as i32);
    let mut cells: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    let (mut unit, mut lo, mut hi) = (0.0, f64::INFINITY, 0.0f64);
    let mut digits = vec![-reach; n];
    loop {
        let q: Vec<f64> = digits.iter().map(|&k| (k as f64 + 0.5) / fine).collect();
        let y = chart.at(&q);
        let r = norm.eval(&y);
        if r <= p.window * (1.0 + 1e-12) {
            let v = chart.speed(&q, norm);
            lo = lo.min(v);
            hi = hi.max(v);
            deposit(&mut cells, &y, res, v * vol);
            if r <= 1.0 {
                unit += v * vol;
            }
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
    if !(unit > 0.0) || !(lo > 0.0) {
        return domain("degenerate model chart");
    }
    for m in cells.values_mut() {
        *m /= unit;
    }
    Ok((lattice_space(&cells, dim, res, norm)?, hi.max(1.0 / lo)))
}

/// Weighted least squares of the normal offsets against `t, .., t^deg` along a direction.
fn fit_polynomial(ys: &[Vec<f64>], w: &[f64], v: &[f64], deg: usize, window: f64, norm: Norm) -> Vec<Vec<f64>> {
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let mut g = vec![vec![0.0; deg]; deg];
    let mut rhs = vec![vec![0.0; deg]; v.len()];
    for (y, &m) in ys.iter().zip(w) {
        if norm.eval(y) > window || m <= 0.0 {
            continue;
        }
        let t = y.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / vv;
        let basis: Vec<f64> = (1..=deg as i32).map(|k| t.powi(k)).collect();
        for a in 0..deg {
            for c in 0..deg {
                g[a][c] += m * basis[a] * basis[c];
            }
        }
        for (k, row) in rhs.iter_mut().enumerate() {
            let z = y[k] - t * v[k];
            for a in 0..deg {
                row[a] += m * z * basis[a];
            }
        }
    }
    rhs.into_iter().map(|r| solve_dense(g.clone(), r).unwrap_or_else(|| vec![0.0; deg])).collect()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if !(a[piv][col].abs() > 1e-300) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Score one blowup against the fitted norm model and, for curves, a
/// polynomial chart model; the smaller upper bound wins.
fn score_blowup(b: &MeasuredSpace, n: usize, p: &ScanParams, point: usize, scale: f64) -> Result<FlatnessRecord> {
    let cloud = match b.space.cloud() {
        Some(c) => c,
        None => return domain("flatness scans need point coordinates"),
    };
    let dim = cloud.dim;
    if n == 0 || n > dim {
        return domain(format!("tangent dimension {n} does not fit a {dim}-dimensional host"));
    }
    let norm = cloud.norm;
    let x0 = b.space.coords(b.base()).unwrap();
    let ys: Vec<Vec<f64>> = (0..b.len()).map(|i| b.space.coords(i).unwrap().iter().zip(&x0).map(|(a, c)| a - c).collect()).collect();
    let res = p.resolution;

    let mut cells: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for (i, y) in ys.iter().enumerate() {
        deposit(&mut cells, y, res, b.weight(i));
    }
    let sampled = lattice_space(&cells, dim, res, norm)?;

    // Second moment about the base over the unit ball.
    let frame: Vec<Vec<f64>> = if n == dim {
        (0..dim).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect()
    } else {
        let mut m = vec![vec![0.0; dim]; dim];
        for (i, y) in ys.iter().enumerate() {
            if norm.eval(y) <= 1.0 + 1e-12 {
                for a in 0..dim {
                    for c in 0..dim {
                        m[a][c] += b.weight(i) * y[a] * y[c];
                    }
                }
            }
        }
        let eig = eigen(m);
        let cols: Vec<Vec<f64>> = eig.into_iter().take(n).map(|(_, v)| {
            let s = norm.eval(&v);
            v.iter().map(|x| x / s).collect()
        }).collect();
        (0..dim).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
    };

    let mut charts = vec![(ModelKind::Norm, Chart { frame: frame.clone(), coef: Vec::new() })];
    if n == 1 && dim > 1 && p.chart_degree > 0 {
        let v: Vec<f64> = frame.iter().map(|r| r[0]).collect();
        let w: Vec<f64> = (0..b.len()).map(|i| b.weight(i)).collect();
        let coef = fit_polynomial(&ys, &w, &v, p.chart_degree, p.window, norm);
        charts.push((ModelKind::Chart, Chart { frame: frame.clone(), coef }));
    }
    let mut best: Option<FlatnessRecord> = None;
    for (kind, chart) in charts {
        let (model, k) = chart_model(&chart, n, dim, p, norm)?;
        let est = estimate_dstar(&sampled, &model, &p.budget, &[])?;
        if best.as_ref().is_none_or(|r| est.upper < r.upper) {
            best = Some(FlatnessRecord {
                point,
                scale,
                lower: est.lower,
                upper: est.upper,
                sampling_slack: b.total_mass() / (2.0 * res as f64),
                atoms: sampled.len(),
                model_atoms: model.len(),
                frame: frame.clone(),
                model: Some(kind),
                chart: chart.coef.clone(),
                fitted_k: Some(k),
                method: Some(est.method),
                inconclusive: est.inconclusive,
                error: None,
            });
        }
    }
    Ok(best.expect("at least the norm model"))
}

/// Score every `(point, scale)` pair; failures are recorded and skipped.
pub fn flatness_scan(s: &MeasuredSpace, n: usize, points: &[usize], scales: &[f64], p: &ScanParams) -> Result<FlatnessReport> {
    s.space.check_indices(points)?;
    if scales.is_empty() || scales.iter().any(|&r| !(r > 0.0 && r.is_finite())) || scales.windows(2).any(|w| w[1] >= w[0]) {
        return domain("scales must be positive, finite and strictly decreasing");
    }
    if !(p.window >= 1.0 && p.window.is_finite()) || p.resolution == 0 {
        return domain("scan window must be at least 1 and the resolution positive");
    }
    let jobs: Vec<(usize, f64)> = points.iter().flat_map(|&x| scales.iter().map(move |&r| (x, r))).collect();
    let records = par::map_slice(&jobs, |&(x, r)| {
        let run = || -> Result<FlatnessRecord> {
            let seq = blowup(s, x, &[r], p.window)?;
            score_blowup(&seq.blowups[0], n, p, x, r)
        };
        run().unwrap_or_else(|e| FlatnessRecord {
            point: x,
            scale: r,
            lower: f64::NAN,
            upper: f64::NAN,
            sampling_slack: f64::NAN,
            atoms: 0,
            model_atoms: 0,
            frame: Vec::new(),
            model: None,
            chart: Vec::new(),
            fitted_k: None,
            method: None,
            inconclusive: true,
            error: Some(e.to_string()),
        })
    });
    let points_out = points
        .iter()
        .map(|&x| {
            let rs: Vec<&FlatnessRecord> = records.iter().filter(|r| r.point == x).collect();
            let ok: Vec<&FlatnessRecord> = rs.iter().copied().filter(|r| r.error.is_none()).collect();
            let worst = ok.iter().map(|r| r.upper).fold(None, |a: Option<f64>, v| Some(a.map_or(v, |a| a.max(v))));
            let trend = (ok.len() >= 2).then(|| ok[ok.len() - 1].upper - ok[0].upper);
            let decreasing = ok.windows(2).all(|w| w[1].upper <= w[0].upper + 1e-9);
            PointSummary { point: x, worst_upper: worst, trend, decreasing, failed: rs.len() - ok.len() }
        })
        .collect();
    Ok(FlatnessReport { n, scales: scales.to_vec(), params: p.clone(), records, points: points_out })
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureVerdict {
    pub kind: FixtureKind,
    pub atoms: usize,
    pub rectifiable: bool,
    pub rectifiable_like: bool,
    /// Probes scored below the threshold.
    pub below: usize,
    pub probes: usize,
    pub inconclusive: usize,
    pub scores: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Confusion {
    pub true_rect: usize,
    pub false_rect: usize,
    pub true_unrect: usize,
    pub false_unrect: usize,
}

impl Confusion {
    fn add(&mut self, truth: bool, predicted: bool) {
        match (truth, predicted) {
            (true, true) => self.true_rect += 1,
            (false, true) => self.false_rect += 1,
            (false, false) => self.true_unrect += 1,
            (true, false) => self.false_unrect += 1,
        }
    }

    pub fn errors(&self) -> usize {
        self.false_rect + self.false_unrect
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    /// `2 ×` the 95th percentile of the segment's per-point worst scores.
    pub tau: f64,
    pub segment_p95: f64,
    pub scales: Vec<f64>,
    pub params: ScanParams,
    pub fixtures: Vec<FixtureVerdict>,
    /// Per fixture.
    pub confusion: Confusion,
    /// Per probe point.
    pub point_confusion: Confusion,
    pub total_atoms: usize,
}

/// Nearest-rank percentile of a non-empty sample.
pub fn percentile(v: &[f64], p: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = ((p * s.len() as f64).ceil() as usize).clamp(1, s.len());
    s[k - 1]
}

/// Scan every fixture, calibrate `τ` on the first segment, classify.
///
/// A probe is rectifiable-like when its worst-scale upper score is below `τ`;
/// a fixture is rectifiable-like when at least half its scored probes are.
pub fn separation_experiment(fixtures: &[Fixture], scales: &[f64], p: &ScanParams) -> Result<SeparationReport> {
    let Some(seg) = fixtures.iter().position(|f| f.kind == FixtureKind::Segment) else {
        return domain("the separation experiment calibrates on a segment fixture");
    };
    let reports: Vec<FlatnessReport> =
        fixtures.iter().map(|f| flatness_scan(&f.space, f.n, &f.probes, scales, p)).collect::<Result<_>>()?;
    let seg_scores: Vec<f64> = reports[seg].points.iter().filter_map(|x| x.worst_upper).collect();
    if seg_scores.is_empty() {
        return domain("no segment probe could be scored");
    }
    let p95 = percentile(&seg_scores, 0.95);
    let tau = 2.0 * p95;
    let mut confusion = Confusion::default();
    let mut point_confusion = Confusion::default();
    let mut verdicts = Vec::new();
    for (f, r) in fixtures.iter().zip(&reports) {
        let scores: Vec<Option<f64>> = r.points.iter().map(|x| x.worst_upper).collect();
        let inconclusive = r.records.iter().filter(|x| x.inconclusive || x.error.is_some()).count();
        let scored: Vec<f64> = scores.iter().flatten().copied().collect();
        let below = scored.iter().filter(|&&s| s < tau).count();
        for &s in &scored {
            point_confusion.add(f.rectifiable, s < tau);
        }
        let like = !scored.is_empty() && 2 * below >= scored.len();
        confusion.add(f.rectifiable, like);
        verdicts.push(FixtureVerdict {
            kind: f.kind,
            atoms: f.space.len(),
            rectifiable: f.rectifiable,
            rectifiable_like: like,
            below,
            probes: f.probes.len(),
            inconclusive,
            scores,
        });
    }
    Ok(SeparationReport {
        tau,
        segment_p95: p95,
        scales: scales.to_vec(),
        params: p.clone(),
        fixtures: verdicts,
        confusion,
        point_confusion,
        total_atoms: fixtures.iter().map(|f| f.space.len()).sum(),
    })
}
