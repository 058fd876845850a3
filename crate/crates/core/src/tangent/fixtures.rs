//! Synthetic labelled fixtures in the sup-norm plane.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::space::{Cloud, MeasuredSpace, Norm, PointedSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    Segment,
    LipschitzGraph,
    LinfPlanePatch,
    FourCornerCantor,
    ScatteredDustCurve,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 5] = [
        FixtureKind::Segment,
        FixtureKind::LipschitzGraph,
        FixtureKind::LinfPlanePatch,
        FixtureKind::FourCornerCantor,
        FixtureKind::ScatteredDustCurve,
    ];
}

/// Generator knobs; `None` picks the kind's default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FixtureParams {
    /// Atoms along a curve, or per axis for the plane patch.
    pub atoms: Option<usize>,
    /// Cantor generation.
    pub generation: Option<u32>,
    /// Lipschitz bound of the graph.
    pub slope: Option<f64>,
    /// Angular frequency of the graph's sine profile.
    pub frequency: Option<f64>,
    /// Dust scales `2^{-1} .. 2^{-levels}`.
    pub dust_levels: Option<u32>,
    /// Dust mass per atom at scale `2^{-j}` is `dust_mass · 4^{-j}`.
    pub dust_mass: Option<f64>,
    pub probes: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub kind: FixtureKind,
    pub params: FixtureParams,
    pub seed: u64,
    /// Dimension of the expected tangent.
    pub n: usize,
    pub rectifiable: bool,
    pub space: MeasuredSpace,
    /// Interior support points used by scans.
    pub probes: Vec<usize>,
}

/// Trapezoid length weights along a polyline.
fn arc_weights(pts: &[Vec<f64>]) -> Vec<f64> {
    let mut w = vec![0.0; pts.len()];
    for i in 1..pts.len() {
        let len = pts[i].iter().zip(&pts[i - 1]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        w[i - 1] += len / 2.0;
        w[i] += len / 2.0;
    }
    w
}

fn spread(candidates: &[usize], k: usize) -> Vec<usize> {
    if candidates.is_empty() || k == 0 {
        return Vec::new();
    }
    let k = k.min(candidates.len());
    (0..k).map(|j| candidates[(2 * j + 1) * candidates.len() / (2 * k)]).collect()
}

fn build(pts: Vec<Vec<f64>>, w: Vec<f64>) -> Result<MeasuredSpace> {
    let cloud = Cloud::new(2, Norm::Linf, &pts)?;
    MeasuredSpace::new(PointedSpace::from_cloud(cloud, 0)?, w)
}

pub fn generate(kind: FixtureKind, params: &FixtureParams, seed: u64) -> Result<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probes_k = params.probes.unwrap_or(8);
    let curve = |atoms: usize, f: &dyn Fn(f64) -> f64| -> Vec<Vec<f64>> {
        (0..atoms).map(|i| i as f64 / (atoms - 1) as f64).map(|t| vec![t, f(t)]).collect()
    };
    let interior = |pts: &[Vec<f64>]| -> Vec<usize> {
        (0..pts.len()).filter(|&i| pts[i].iter().all(|&x| (0.3..=0.7).contains(&x)) || (pts[i][1] == 0.0 && (0.3..=0.7).contains(&pts[i][0]))).collect()
    };
    let (n, rectifiable, space, probes) = match kind {
        FixtureKind::Segment => {
            let atoms = params.atoms.unwrap_or(1001);
            if atoms < 2 {
                return domain("a segment needs at least 2 atoms");
            }
            let pts = curve(atoms, &|_| 0.0);
            let w = arc_weights(&pts);
            let probes = spread(&interior(&pts), probes_k);
            (1, true, build(pts, w)?, probes)
        }
        FixtureKind::LipschitzGraph => {
            let atoms = params.atoms.unwrap_or(1001);
            let slope = params.slope.unwrap_or(0.5);
            let freq = params.frequency.unwrap_or(3.0);
            if atoms < 2 || !(slope >= 0.0 && slope.is_finite()) || !(freq > 0.0 && freq.is_finite()) {
                return domain("a graph needs at least 2 atoms, a finite non-negative slope and a positive frequency");
            }
            let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let pts = curve(atoms, &|t| 0.5 + slope / freq * (freq * t + phase).sin());
            let w = arc_weights(&pts);
            let cand: Vec<usize> = (0..atoms).filter(|&i| (0.3..=0.7).contains(&pts[i][0])).collect();
            (1, true, build(pts, w)?, spread(&cand, probes_k))
        }
        FixtureKind::LinfPlanePatch => {
            let side = params.atoms.unwrap_or(97);
            if side < 2 {
                return domain("a plane patch needs at least 2 atoms per axis");
            }
            // A square lattice turned by a badly approximable slope: closed sup-norm
            // balls centred on atoms then never meet rows of atoms edge-on, so ball
            // masses track area at every radius.
            let h = 1.0 / (side - 1) as f64;
            let slope = (5f64.sqrt() - 1.0) / 2.0;
            let (c, sn) = (1.0 / (1.0 + slope * slope).sqrt(), slope / (1.0 + slope * slope).sqrt());
            let reach = (side as f64 * 0.75).ceil() as i64;
            let mut pts = Vec::new();
            for j in -reach..=reach {
                for i in -reach..=reach {
                    let (u, v) = (i as f64 * h, j as f64 * h);
                    let p = vec![0.5 + c * u - sn * v, 0.5 + sn * u + c * v];
                    if p.iter().all(|x| (0.0..=1.0).contains(x)) {
                        pts.push(p);
                    }
                }
            }
            let w = vec![h * h; pts.len()];
            let probes = spread(&interior(&pts), probes_k);
            (2, true, build(pts, w)?, probes)
        }
        FixtureKind::FourCornerCantor => {
            let g = params.generation.unwrap_or(4);
            if g == 0 || g > 8 {
                return domain(format!("Cantor generation {g} outside 1..=8"));
            }
            let mut cells = vec![(0.0f64, 0.0f64)];
            let mut size = 1.0;
            for _ in 0..g {
                let next = size / 4.0;
                cells = cells
                    .iter()
                    .flat_map(|&(x, y)| [(x, y), (x + 3.0 * next, y), (x, y + 3.0 * next), (x + 3.0 * next, y + 3.0 * next)])
                    .collect();
                size = next;
            }
            cells.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
            let pts: Vec<Vec<f64>> = cells.iter().map(|&(x, y)| vec![x + size / 2.0, y + size / 2.0]).collect();
            let m = pts.len();
            let all: Vec<usize> = (0..m).collect();
            (1, false, build(pts, vec![1.0 / m as f64; m])?, spread(&all, probes_k))
        }
        FixtureKind::ScatteredDustCurve => {
            let atoms = params.atoms.unwrap_or(1001);
            let levels = params.dust_levels.unwrap_or(6);
            let c = params.dust_mass.unwrap_or(0.002);
            if atoms < 2 || levels > 16 || !(c >= 0.0 && c.is_finite()) {
                return domain("dust curve needs ≥ 2 atoms, ≤ 16 dust levels and a finite dust mass");
            }
            let mut pts = curve(atoms, &|_| 0.0);
            let mut w = arc_weights(&pts);
            let probes = spread(&interior(&pts), probes_k);
            for j in 1..=levels {
                let h = 2f64.powi(-(j as i32));
                for k in 0..(1u32 << j) {
                    let u: f64 = rng.gen_range(0.25..0.75);
                    let side = if k % 2 == 0 { 1.0 } else { -1.0 };
                    pts.push(vec![(k as f64 + u) * h, side * h / 2.0]);
                    w.push(c * h * h);
                }
            }
            (1, true, build(pts, w)?, probes)
        }
    };
    Ok(Fixture { kind, params: params.clone(), seed, n, rectifiable, space, probes })
}
