//! Limit assembly, Hölder audits and the content-defect certificate.

use serde::Serialize;

use super::build::{Ledger, LevelRecord};
use super::constants::Constants;
use super::host::{sup, Host};
use super::lattice::{CubeComplex, Grid};
use super::mcshane::extend_with;
use crate::error::{Error, Result};
use crate::par;
use crate::tol;

/// One asserted inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Check {
    fn new(name: &str, lhs: f64, rhs: f64, witness: Option<String>) -> Self {
        Self { name: name.into(), lhs, rhs, pass: tol::le(lhs, rhs), witness }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BadBall {
    pub level: u32,
    pub corner: Vec<u64>,
    pub center: usize,
    /// In units of the cube side.
    pub radius: f64,
    pub gap_to_g: Option<f64>,
    /// Physical mass of the ball.
    pub mass: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContentRecord {
    /// Deepest lattice points inside bad cubes.
    pub y_points: usize,
    /// Largest `d(ι y, ι p)/ρ` from a point of a bad cube to its nearest corner image.
    pub lambda_measured: f64,
    pub lambda_bound: f64,
    /// Smallest factor `κ` with every `ι y` inside some `κ B'`, `B'` in the subcover.
    pub cover_factor: f64,
    /// `Σ (2κρ')^n` over the subcover, physical.
    pub content_upper: f64,
    /// `(2κ)^n/η · Σ μ(B')`.
    pub chain_bound: f64,
    pub subcover_mass: f64,
    /// `μ(B(ι(0), 10L r) ∖ G)`.
    pub mass_outside_g: f64,
    pub lambda: f64,
    /// `Λ · mass_outside_g`.
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MapEntry {
    pub p: Vec<u64>,
    pub image: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderCertificate {
    pub constants: Constants,
    pub grid: Grid,
    /// Physical cube side; lengths below are in units of it unless noted.
    pub r: f64,
    /// Finest lattice cells per axis; lattice coordinates are integers in `0..=cells`.
    pub cells: u64,
    pub seed_lip: f64,
    pub delta: f64,
    pub holder_exponent: f64,
    /// `5 L l^{-α}`.
    pub holder_constant_bound: f64,
    /// `5 L ρ^{-α}` with the lattice refinement ratio `ρ` in place of `l`.
    pub holder_constant_lattice: f64,
    pub holder_measured_domain: f64,
    pub holder_measured_full: f64,
    pub levels: Vec<LevelRecord>,
    pub domain: Vec<MapEntry>,
    /// Physical host coordinates of the extension at every deepest lattice point,
    /// first axis varying fastest.
    pub full: Vec<Vec<f64>>,
    pub bad_balls: Vec<BadBall>,
    pub content: ContentRecord,
    pub checks: Vec<Check>,
}

impl HolderCertificate {
    pub fn bad_cube_count(&self) -> usize {
        self.levels.iter().map(|l| l.bad.len()).sum()
    }
}

fn finite_or_zero(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        0.0
    }
}

/// Worst ratio `|F(a) − F(b)| / w(a,b)` and its pair, over all pairs.
fn worst_pair<F, W>(n: usize, gap: F, weight: W) -> (f64, usize, usize)
where
    F: Fn(usize, usize) -> f64 + Sync,
    W: Fn(usize, usize) -> f64 + Sync,
{
    par::map_range(n, |a| {
        let mut best = (0.0, a, a);
        for b in a + 1..n {
            let g = gap(a, b);
            if g > 0.0 {
                let r = g / weight(a, b);
                if r > best.0 {
                    best = (r, a, b);
                }
            }
        }
        best
    })
    .into_iter()
    .fold((0.0, 0, 0), |acc, x| if x.0 > acc.0 { x } else { acc })
}

/// Combine the level ledger into a Hölder map on the deepest lattice and certify it.
pub fn assemble_holder(host: &Host, cx: &CubeComplex, ledger: &Ledger, consts: &Constants) -> Result<HolderCertificate> {
    let n = cx.n;
    let cells = cx.cells() as usize;
    let alpha = consts.alpha;
    let big_l = ledger.seed_lip;
    let h_bound = 5.0 * big_l * consts.l.powf(-alpha);
    let h_lattice = 5.0 * big_l * cx.grid.ratio().powf(-alpha);
    let powt: Vec<f64> = (0..=cells).map(|t| (t as f64 / cells as f64).powf(alpha)).collect();
    let mut checks = Vec::new();

    let dom: Vec<(u64, usize)> = ledger.map.values.iter().map(|(&p, &i)| (p, i)).collect();
    let dom_c: Vec<Vec<u64>> = dom.iter().map(|&(p, _)| cx.decode(p)).collect();
    let units = |a: &[u64], b: &[u64]| a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0) as usize;

    // Partition of the deepest cubes into surviving good cubes and bad cubes.
    let mut owner = vec![0u8; cx.cubes(cx.grid.depth).len()];
    let finest = cx.step(cx.grid.depth);
    let index = |c: &[u64]| c.iter().rev().fold(0usize, |acc, &x| acc * cells + (x / finest) as usize);
    let mut mark = |k: u32, cube: u64| {
        for sub in cx.cube_points(k, cube, cx.grid.depth) {
            let c = cx.decode(sub);
            if c.iter().all(|&x| (x as usize) < cells) && c.iter().zip(cx.decode(cube)).all(|(&x, y)| x < y + cx.step(k)) {
                owner[index(&c)] += 1;
            }
        }
    };
    for lev in &ledger.levels {
        for &b in &lev.split.bad {
            mark(lev.level, b);
        }
    }
    let last = ledger.levels.last().expect("ledger has a seed level");
    let final_good: Vec<u64> = last.split.good.iter().map(|g| g.0).collect();
    for &g in &final_good {
        mark(last.level, g);
    }
    let covered = owner.iter().filter(|&&o| o == 1).count();
    checks.push(Check::new("deepest cubes partitioned into good and bad", (owner.len() - covered) as f64, 0.0, None));

    // Union domain stays near the origin image.
    let o = ledger.map.values.get(&0).copied().ok_or_else(|| Error::Internal("origin missing from the domain".into()))?;
    let spread = dom.iter().map(|&(_, i)| host.d(i, o)).fold(0.0, f64::max);
    checks.push(Check::new("domain images within 5L of the origin image", spread, 5.0 * big_l, None));

    let (hd, a, b) = worst_pair(dom.len(), |a, b| host.d(dom[a].1, dom[b].1), |a, b| powt[units(&dom_c[a], &dom_c[b])]);
    checks.push(Check::new(
        "Hölder audit on the union domain",
        hd,
        h_bound,
        (hd > 0.0).then(|| format!("{:?} {:?}", dom_c[a], dom_c[b])),
    ));
    let domain_ok = tol::le(hd, h_bound);

    // Coordinatewise extension to the deepest lattice.
    let all = cx.points(cx.grid.depth);
    let all_c: Vec<Vec<u64>> = all.iter().map(|&p| cx.decode(p)).collect();
    let pos: std::collections::HashMap<u64, usize> = all.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let known: Vec<(usize, usize)> = dom.iter().map(|&(p, i)| (pos[&p], i)).collect();
    let dist_alpha = |x: usize, y: usize| powt[units(&all_c[x], &all_c[y])];
    let full: Vec<Vec<f64>> = if known.len() == all.len() {
        let mut v = vec![Vec::new(); all.len()];
        for &(x, i) in &known {
            v[x] = host.x(i).to_vec();
        }
        v
    } else {
        let cols: Vec<Vec<f64>> = (0..host.dim)
            .map(|j| {
                let data: Vec<(usize, f64)> = known.iter().map(|&(x, i)| (x, host.x(i)[j])).collect();
                extend_with(all.len(), &data, 1.0, h_bound, &dist_alpha)
            })
            .collect();
        (0..all.len()).map(|x| cols.iter().map(|c| c[x]).collect()).collect()
    };
    let (hf, a, b) = worst_pair(all.len(), |a, b| sup(&full[a], &full[b]), dist_alpha);
    checks.push(Check::new(
        "Hölder audit on the full deepest lattice",
        hf,
        h_bound,
        (hf > 0.0).then(|| format!("{:?} {:?}", all_c[a], all_c[b])),
    ));

    // Seed lattice bi-Lipschitz constant and neighbour displacement.
    let seed_pts = cx.points(0);
    let m = cx.grid.seed_bits;
    if big_l > 0.0 {
        let seed: Vec<(Vec<u64>, usize)> = seed_pts.iter().map(|p| (cx.decode(*p), ledger.map.values[p])).collect();
        let mut worst = (1.0f64, String::new());
        for s in 0..seed.len() {
            for t in s + 1..seed.len() {
                let dp = units(&seed[s].0, &seed[t].0) as f64 / cells as f64;
                let di = host.d(seed[s].1, seed[t].1);
                let dist = if di == 0.0 { f64::INFINITY } else { (di / dp).max(dp / di) };
                if dist > worst.0 {
                    worst = (dist, format!("{:?} {:?}", seed[s].0, seed[t].0));
                }
            }
        }
        checks.push(Check::new(
            "seed lattice bi-Lipschitz constant",
            worst.0,
            consts.k + 2f64.powi(-(m as i32)),
            (!worst.1.is_empty()).then_some(worst.1),
        ));
    }
    let reach = cx.step(0) as usize;
    let disp = par::map_range(all.len(), |a| {
        (a + 1..all.len()).filter(|&b| units(&all_c[a], &all_c[b]) <= reach).map(|b| sup(&full[a], &full[b])).fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max);
    checks.push(Check::new(
        "displacement between seed-scale neighbours",
        disp,
        10.0 * consts.k * 2f64.powf(-(m as f64) * consts.gamma / 2.0),
        None,
    ));

    // Bad-ball inventory.
    let mut balls: Vec<BadBall> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for lev in &ledger.levels {
        let rho = lev.beta * lev.side;
        for &cube in &lev.split.bad {
            for p in cx.corners(lev.level, cube) {
                if !seen.insert((lev.level, p)) {
                    continue;
                }
                let center = ledger.map.values[&p];
                balls.push(BadBall {
                    level: lev.level,
                    corner: cx.decode(p),
                    center,
                    radius: rho,
                    gap_to_g: host.nearest_g(center).map(|g| g.0),
                    mass: host.ball_mass(host.x(center), rho),
                    selected: false,
                });
            }
        }
    }
    let avoid = balls
        .iter()
        .map(|b| b.gap_to_g.map_or(f64::NEG_INFINITY, |g| b.radius - g))
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check {
        name: "bad balls miss G".into(),
        lhs: finite_or_zero(avoid),
        rhs: 0.0,
        pass: balls.is_empty() || avoid < 0.0,
        witness: None,
    });
    let dens = balls.iter().map(|b| consts.eta * (b.radius * host.r).powi(n as i32) - b.mass).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("bad balls carry η ρ^n mass", dens.max(0.0), 0.0, None));
    let outer = 10.0 * big_l;
    let reach_o = balls.iter().map(|b| host.d(b.center, o) + b.radius).fold(0.0, f64::max);
    checks.push(Check::new("bad balls inside B(ι(0), 10L)", reach_o, outer, None));

    // Disjoint subcover, largest radii first.
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&a, &b| {
        balls[b].radius.total_cmp(&balls[a].radius).then(balls[a].center.cmp(&balls[b].center)).then(a.cmp(&b))
    });
    let mut chosen: Vec<usize> = Vec::new();
    for &a in &order {
        if chosen.iter().all(|&c| host.d(balls[a].center, balls[c].center) > balls[a].radius + balls[c].radius) {
            chosen.push(a);
        }
    }
    for &c in &chosen {
        balls[c].selected = true;
    }
    let overlap = chosen
        .iter()
        .flat_map(|&a| chosen.iter().map(move |&b| (a, b)))
        .filter(|(a, b)| a < b)
        .map(|(a, b)| balls[a].radius + balls[b].radius - host.d(balls[a].center, balls[b].center))
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check {
        name: "subcover balls pairwise disjoint".into(),
        lhs: finite_or_zero(overlap),
        rhs: 0.0,
        pass: chosen.len() < 2 || overlap < 0.0,
        witness: None,
    });
    let enlarge = balls
        .iter()
        .map(|b| {
            chosen
                .iter()
                .map(|&c| {
                    let d = host.d(b.center, balls[c].center) + b.radius;
                    if d == 0.0 {
                        0.0
                    } else {
                        d / balls[c].radius
                    }
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    checks.push(Check::new("every bad ball inside 5× a subcover ball", enlarge, 5.0, None));

    // Image of the bad cubes, sampled on the deepest lattice.
    let ratio_of = |d: f64, rho: f64| if d == 0.0 { 0.0 } else { d / rho };
    let mut lambda_m: f64 = 0.0;
    let mut ys: Vec<usize> = Vec::new();
    for lev in &ledger.levels {
        let rho = lev.beta * lev.side;
        for &cube in &lev.split.bad {
            let corners: Vec<usize> = cx.corners(lev.level, cube).iter().map(|p| ledger.map.values[p]).collect();
            for y in cx.cube_points(lev.level, cube, cx.grid.depth) {
                let x = pos[&y];
                ys.push(x);
                let near = corners.iter().map(|&c| ratio_of(sup(&full[x], host.x(c)), rho)).fold(f64::INFINITY, f64::min);
                lambda_m = lambda_m.max(near);
            }
        }
    }
    ys.sort_unstable();
    ys.dedup();
    let kappa = ys
        .iter()
        .map(|&x| chosen.iter().map(|&c| ratio_of(sup(&full[x], host.x(balls[c].center)), balls[c].radius)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let sm = consts.sigma.powi(consts.big_m as i32);
    let lambda_bound = 5.0 * sm * consts.l.powf(-alpha);
    checks.push(Check::new("bad cube images inside λ-enlarged corner balls", lambda_m, lambda_bound, None));
    checks.push(Check::new("bad cube images inside 5λ-enlarged subcover", kappa, 5.0 * lambda_bound, None));
    let ni = n as i32;
    let content_upper: f64 = chosen.iter().map(|&c| (2.0 * kappa * balls[c].radius * host.r).powi(ni)).sum();
    let subcover_mass: f64 = chosen.iter().map(|&c| balls[c].mass).sum();
    let chain_bound = (2.0 * kappa).powi(ni) / consts.eta * subcover_mass;
    let mass_outside_g = host.mass_outside_g(host.x(o), outer);
    checks.push(Check::new("content of bad image ≤ density chain", content_upper, chain_bound, None));
    checks.push(Check::new("subcover mass ≤ mass outside G", subcover_mass, mass_outside_g, None));
    let bound = consts.lambda * mass_outside_g;
    checks.push(Check::new("content defect ≤ Λ · μ(B(ι(0), 10L) ∖ G)", content_upper, bound, None));

    let content = ContentRecord {
        y_points: ys.len(),
        lambda_measured: lambda_m,
        lambda_bound,
        cover_factor: kappa,
        content_upper,
        chain_bound,
        subcover_mass,
        mass_outside_g,
        lambda: consts.lambda,
        bound,
    };
    let cert = HolderCertificate {
        constants: consts.clone(),
        grid: cx.grid,
        r: host.r,
        cells: cx.cells(),
        seed_lip: big_l,
        delta: ledger.delta,
        holder_exponent: alpha,
        holder_constant_bound: h_bound,
        holder_constant_lattice: h_lattice,
        holder_measured_domain: hd,
        holder_measured_full: hf,
        levels: ledger.levels.clone(),
        domain: dom.iter().zip(&dom_c).map(|(&(_, i), c)| MapEntry { p: c.clone(), image: i }).collect(),
        full: full.iter().map(|v| v.iter().map(|x| x * host.r).collect()).collect(),
        bad_balls: balls,
        content,
        checks,
    };
    if !domain_ok {
        return Err(Error::Certificate(format!("Hölder audit on the domain failed: {hd} > {h_bound}")));
    }
    if let Some(c) = cert.checks.iter().find(|c| !c.pass) {
        return Err(Error::Certificate(format!(
            "{}: {} > {}{}",
            c.name,
            c.lhs,
            c.rhs,
            c.witness.as_ref().map(|w| format!(" at {w}")).unwrap_or_default()
        )));
    }
    Ok(cert)
}
