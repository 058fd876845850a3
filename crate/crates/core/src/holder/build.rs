//! Level-by-level extension of a seed map along good cubes.

use std::collections::BTreeMap;

use serde::Serialize;

use super::constants::Constants;
use super::host::{sup, Frame, Host};
use super::lattice::{CubeComplex, Face};
use super::mcshane::extend_with;
use crate::error::{Error, Result};
use crate::par;
use crate::tol;

/// Lattice points (packed) mapped to indices of the host.
#[derive(Debug, Clone)]
pub struct PartialMap {
    pub level: u32,
    pub beta: f64,
    pub values: BTreeMap<u64, usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CubeEntry {
    pub corner: Vec<u64>,
    /// Nearest qualifying `G` point for good cubes.
    pub witness: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct Split {
    /// `(packed corner, witness)`, sorted by corner.
    pub good: Vec<(u64, usize)>,
    pub bad: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RungRecord {
    /// Faces of dimension `m + 1` were filled.
    pub m: usize,
    pub beta: f64,
    pub faces: usize,
    pub chart_radius: f64,
    pub max_face_lip: f64,
    pub face_bound: f64,
    pub max_fit_error: f64,
    pub fit_bound: f64,
    pub max_chart_distortion: f64,
    pub chart_bound: f64,
    /// Local Lipschitz constant after the rung, over pairs within one parent side.
    pub local_lip: f64,
    pub local_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub level: u32,
    pub side: f64,
    pub beta: f64,
    /// `σ β` of the previous level, which `beta` must not exceed.
    pub growth_bound: Option<f64>,
    pub rungs: Vec<RungRecord>,
    pub good: Vec<CubeEntry>,
    pub bad: Vec<CubeEntry>,
    pub domain_size: usize,
    #[serde(skip)]
    pub split: Split,
}

#[derive(Debug, Clone)]
pub struct Ledger {
    pub seed_lip: f64,
    pub levels: Vec<LevelRecord>,
    pub map: PartialMap,
    pub delta: f64,
}

fn face_name(cx: &CubeComplex, f: &Face) -> String {
    let axes: Vec<usize> = (0..cx.n).filter(|j| f.mask & (1 << j) != 0).collect();
    format!("level {} corner {:?} axes {:?}", f.level, cx.decode(f.corner), axes)
}

fn image(map: &BTreeMap<u64, usize>, cx: &CubeComplex, p: u64) -> Result<usize> {
    map.get(&p).copied().ok_or_else(|| Error::Domain(format!("lattice point {:?} is not in the map domain", cx.decode(p))))
}

/// Classify level-`k` cubes by whether a corner image sees `G` within `β·side`.
pub fn split_good_bad(cx: &CubeComplex, k: u32, cubes: &[u64], map: &PartialMap, host: &Host, beta: f64) -> Result<Split> {
    let reach = beta * cx.grid.side(k);
    let rows = par::map_slice(cubes, |&cube| -> Result<(u64, Option<usize>)> {
        let imgs = cx.corners(k, cube).into_iter().map(|p| image(&map.values, cx, p)).collect::<Result<Vec<_>>>()?;
        let best = imgs
            .iter()
            .filter_map(|&i| host.nearest_g(i))
            .filter(|&(d, _)| tol::le(d, reach))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some((_, g)) = best else { return Ok((cube, None)) };
        if let Some(&i) = imgs.iter().find(|&&i| !tol::le(host.d(i, g), 2.0 * reach)) {
            return Err(Error::Certificate(format!(
                "cube {:?}: corner image {i} is {} from witness {g}, above 2β·side = {}",
                cx.decode(cube),
                host.d(i, g),
                2.0 * reach
            )));
        }
        Ok((cube, Some(g)))
    });
    let mut out = Split::default();
    for row in rows {
        match row? {
            (cube, Some(g)) => out.good.push((cube, g)),
            (cube, None) => out.bad.push(cube),
        }
    }
    out.good.sort_unstable();
    out.bad.sort_unstable();
    Ok(out)
}

/// Parameters shared by every face extension.
#[derive(Debug, Clone, Copy)]
pub struct FaceContext<'a> {
    pub host: &'a Host<'a>,
    pub cx: &'a CubeComplex,
    pub frame: &'a Frame,
    pub k: f64,
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct FaceOutcome {
    pub face: Face,
    /// New values on the face interior.
    pub values: Vec<(u64, usize)>,
    pub lip: f64,
    pub fit_error: f64,
    pub chart_distortion: f64,
}

/// Fill the level-`k+1` lattice points inside a level-`k` face.
///
/// The boundary is pulled back to the parameter box through an affine chart
/// centred at the witness, the pull-back is extended by McShane with its own
/// Lipschitz constant, and the result is pushed forward again.
pub fn extend_face(ctx: &FaceContext, face: &Face, map: &BTreeMap<u64, usize>, witness: usize, beta: f64) -> Result<FaceOutcome> {
    let FaceContext { host, cx, frame, k, delta } = *ctx;
    let fail = |reason: String| Error::Extension { face: face_name(cx, face), reason };
    let h = cx.grid.side(face.level);
    if !(beta < 1.0 / (2.0 * h)) {
        return Err(Error::Precondition(format!("budget β = {beta} is not below 1/(2·side) = {}", 1.0 / (2.0 * h))));
    }
    let pts = cx.face_points(face);
    let mut known: Vec<(usize, usize)> = Vec::new();
    for (a, &(p, boundary)) in pts.iter().enumerate() {
        if boundary {
            let i = map.get(&p).copied().ok_or_else(|| fail(format!("boundary point {:?} has no value", cx.decode(p))))?;
            known.push((a, i));
        }
    }
    let r = 2.0 * beta * h;
    for &(a, i) in &known {
        if !tol::le(host.d(i, witness), r) {
            return Err(fail(format!(
                "boundary image {i} of {:?} is {} from the witness, above 2β·side = {r}",
                cx.decode(pts[a].0),
                host.d(i, witness)
            )));
        }
    }
    let interior: Vec<usize> = (0..pts.len()).filter(|&a| !pts[a].1).collect();
    if r == 0.0 {
        let i = known[0].1;
        if known.iter().any(|&(_, j)| host.d(i, j) > 0.0) {
            return Err(fail("zero budget with a non-constant boundary".into()));
        }
        let values = interior.iter().map(|&a| (pts[a].0, i)).collect();
        return Ok(FaceOutcome { face: *face, values, lip: 0.0, fit_error: 0.0, chart_distortion: 0.0 });
    }

    let phi = k * (1.0 + 2.0 * delta);
    let centre = host.x(witness);
    let chart = |q: &[f64]| -> usize {
        let t: Vec<f64> = centre.iter().zip(frame.apply(q)).map(|(c, v)| c + r * v).collect();
        host.nearest_c(&t)
    };
    let mut q: Vec<Option<Vec<f64>>> = vec![None; pts.len()];
    let mut fit_error: f64 = 0.0;
    for &(a, i) in &known {
        let v: Vec<f64> = host.x(i).iter().zip(centre).map(|(x, c)| (x - c) / r).collect();
        let qa: Vec<f64> = frame.solve(&v).into_iter().map(|t| t.clamp(-phi, phi)).collect();
        let err = host.d(i, chart(&qa));
        if !tol::le(err, 2.0 * delta * r) {
            return Err(fail(format!("chart misses boundary image {i} by {err}, above 2δr = {}", 2.0 * delta * r)));
        }
        fit_error = fit_error.max(err);
        q[a] = Some(qa);
    }

    let d = |a: usize, b: usize| cx.dist(pts[a].0, pts[b].0);
    let n = frame.n();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let data: Vec<(usize, f64)> = known.iter().map(|&(a, _)| (a, q[a].as_ref().unwrap()[j])).collect();
        let mut lip: f64 = 0.0;
        for (s, &(a, fa)) in data.iter().enumerate() {
            for &(b, fb) in &data[s + 1..] {
                lip = lip.max((fa - fb).abs() / d(a, b));
            }
        }
        cols.push(extend_with(pts.len(), &data, 1.0, lip, &d));
    }
    let qs: Vec<Vec<f64>> = (0..pts.len()).map(|a| cols.iter().map(|c| c[a]).collect()).collect();
    let xi: Vec<usize> = qs.iter().map(|qa| chart(qa)).collect();
    let mut img: Vec<usize> = xi.clone();
    for &(a, i) in &known {
        img[a] = i;
    }

    let bound = 2.0 * k * k * beta;
    let mut lip: f64 = 0.0;
    let mut distortion: f64 = 0.0;
    for a in 0..pts.len() {
        for b in a + 1..pts.len() {
            let t = d(a, b);
            let ratio = host.d(img[a], img[b]) / t;
            if !tol::le(ratio, bound) {
                return Err(fail(format!(
                    "points {:?} and {:?} stretch by {ratio}, above 2K²β = {bound}",
                    cx.decode(pts[a].0),
                    cx.decode(pts[b].0)
                )));
            }
            lip = lip.max(ratio);
            let dq = sup(&qs[a], &qs[b]);
            let dx = host.d(xi[a], xi[b]) / r;
            distortion = distortion.max(dx - k * dq).max(dq / k - dx);
        }
    }
    if !tol::le(distortion, delta) {
        return Err(fail(format!("chart distortion {distortion} exceeds δ = {delta}; local data is not a K-bi-Lipschitz sheet")));
    }
    let values = interior.iter().map(|&a| (pts[a].0, img[a])).collect();
    Ok(FaceOutcome { face: *face, values, lip, fit_error, chart_distortion: distortion.max(0.0) })
}

/// Largest `d(ι p, ι p') / ‖p − p'‖` over map pairs at most `reach` level-`k` steps apart.
pub(crate) fn local_lip(cx: &CubeComplex, host: &Host, map: &BTreeMap<u64, usize>, k: u32, reach: u64) -> f64 {
    let pts: Vec<(u64, usize)> = map.iter().map(|(&p, &i)| (p, i)).collect();
    let step = cx.step(k);
    par::map_slice(&pts, |&(p, i)| {
        cx.forward_neighbours(p, step, reach)
            .into_iter()
            .filter_map(|q| map.get(&q).map(|&j| host.d(i, j) / cx.dist(p, q)))
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max)
}

/// Fill the `(m+1)`-faces of the good level-`k` cubes, each shared face once.
pub fn extend_skeleton(ctx: &FaceContext, k: u32, good: &[(u64, usize)], map: &mut PartialMap, beta: f64, m: usize) -> Result<RungRecord> {
    let cx = ctx.cx;
    let mut faces: BTreeMap<Face, usize> = BTreeMap::new();
    for &(cube, g) in good {
        for f in cx.faces(k, cube, m + 1) {
            faces.entry(f).or_insert(g);
        }
    }
    let list: Vec<(Face, usize)> = faces.into_iter().collect();
    let outcomes = par::map_slice(&list, |(f, g)| extend_face(ctx, f, &map.values, *g, beta));
    let mut rec = RungRecord {
        m,
        beta,
        faces: list.len(),
        chart_radius: 2.0 * beta * cx.grid.side(k),
        max_face_lip: 0.0,
        face_bound: 2.0 * ctx.k * ctx.k * beta,
        max_fit_error: 0.0,
        fit_bound: 4.0 * ctx.delta * beta * cx.grid.side(k),
        max_chart_distortion: 0.0,
        chart_bound: ctx.delta,
        local_lip: 0.0,
        local_bound: 5.0 * ctx.k * ctx.k * beta,
    };
    for o in outcomes {
        let o = o?;
        rec.max_face_lip = rec.max_face_lip.max(o.lip);
        rec.max_fit_error = rec.max_fit_error.max(o.fit_error);
        rec.max_chart_distortion = rec.max_chart_distortion.max(o.chart_distortion);
        for (p, i) in o.values {
            if map.values.insert(p, i).is_some() {
                return Err(Error::Internal(format!("face {} overwrote {:?}", face_name(cx, &o.face), cx.decode(p))));
            }
        }
    }
    rec.local_lip = local_lip(cx, ctx.host, &map.values, k + 1, cx.b());
    if !tol::le(rec.local_lip, rec.local_bound) {
        return Err(Error::Certificate(format!(
            "after filling {}-faces at level {k}: local constant {} exceeds 5K²β = {}",
            m + 1,
            rec.local_lip,
            rec.local_bound
        )));
    }
    Ok(rec)
}

/// Seed map `p ↦` nearest `C` point to `x₀ + A p` on the level-0 lattice.
pub fn affine_seed(host: &Host, cx: &CubeComplex, origin: usize, frame: &Frame) -> Result<PartialMap> {
    if frame.n() != cx.n || frame.dim() != host.dim {
        return Err(Error::Domain(format!(
            "frame maps ℝ^{} to ℝ^{}, need ℝ^{} to ℝ^{}",
            frame.n(),
            frame.dim(),
            cx.n,
            host.dim
        )));
    }
    host.space.space.check_index(origin)?;
    let x0 = host.x(origin).to_vec();
    let pts = cx.points(0);
    let imgs = par::map_slice(&pts, |&p| {
        let t: Vec<f64> = x0.iter().zip(frame.apply(&cx.position(p))).map(|(a, b)| a + b).collect();
        host.nearest_c(&t)
    });
    let values: BTreeMap<u64, usize> = pts.into_iter().zip(imgs).collect();
    let beta = seed_lip(cx, host, &values);
    Ok(PartialMap { level: 0, beta, values })
}

fn seed_lip(cx: &CubeComplex, host: &Host, values: &BTreeMap<u64, usize>) -> f64 {
    let v: Vec<(u64, usize)> = values.iter().map(|(&p, &i)| (p, i)).collect();
    par::map_range(v.len(), |a| v[a + 1..].iter().map(|&(q, j)| host.d(v[a].1, j) / cx.dist(v[a].0, q)).fold(0.0, f64::max))
        .into_iter()
        .fold(0.0, f64::max)
}

fn entries(cx: &CubeComplex, cubes: &[u64], witness: Option<&[(u64, usize)]>) -> Vec<CubeEntry> {
    match witness {
        Some(w) => w.iter().map(|&(c, g)| CubeEntry { corner: cx.decode(c), witness: Some(g) }).collect(),
        None => cubes.iter().map(|&c| CubeEntry { corner: cx.decode(c), witness: None }).collect(),
    }
}

/// Alternate the full skeleton ladder with the good/bad split, level by level.
pub fn iterate_levels(host: &Host, cx: &CubeComplex, seed: &PartialMap, consts: &Constants, frame: &Frame) -> Result<Ledger> {
    if consts.n != cx.n {
        return Err(Error::Domain(format!("constants are for n = {}, lattice has n = {}", consts.n, cx.n)));
    }
    let level0 = cx.points(0);
    if seed.level != 0 || level0.iter().any(|p| !seed.values.contains_key(p)) || seed.values.len() != level0.len() {
        return Err(Error::Domain("seed must be defined exactly on the level-0 lattice".into()));
    }
    let l_seed = seed_lip(cx, host, &seed.values);
    let cap = consts.sigma.powi(consts.big_m as i32);
    if !tol::le(l_seed, cap) {
        return Err(Error::Precondition(format!("seed Lipschitz constant {l_seed} exceeds σ^M = {cap}")));
    }
    let delta = cx.grid.ratio() / 20.0;
    let ctx = FaceContext { host, cx, frame, k: consts.k, delta };
    let mut map = PartialMap { level: 0, beta: l_seed, values: seed.values.clone() };
    let split = split_good_bad(cx, 0, &cx.cubes(0), &map, host, l_seed)?;
    let mut levels = vec![LevelRecord {
        level: 0,
        side: cx.grid.side(0),
        beta: l_seed,
        growth_bound: None,
        rungs: Vec::new(),
        good: entries(cx, &[], Some(&split.good)),
        bad: entries(cx, &split.bad, None),
        domain_size: map.values.len(),
        split,
    }];
    for k in 0..cx.grid.depth {
        let prev = levels.last().unwrap();
        if prev.split.good.is_empty() {
            break;
        }
        let beta_k = prev.beta;
        let good = prev.split.good.clone();
        let mut rungs = Vec::with_capacity(cx.n);
        let mut beta = beta_k;
        for m in 0..cx.n {
            let rec = extend_skeleton(&ctx, k, &good, &mut map, beta, m)?;
            beta = beta_k.max(rec.local_lip);
            rungs.push(rec);
        }
        let next = local_lip(cx, host, &map.values, k + 1, cx.b());
        let growth = consts.sigma * beta_k;
        if !tol::le(next, growth) {
            return Err(Error::Certificate(format!("level {}: local constant {next} exceeds σβ = {growth}", k + 1)));
        }
        map.level = k + 1;
        map.beta = next;
        let children: Vec<u64> = good.iter().flat_map(|&(c, _)| cx.children(k, c)).collect();
        let split = split_good_bad(cx, k + 1, &children, &map, host, next)?;
        levels.push(LevelRecord {
            level: k + 1,
            side: cx.grid.side(k + 1),
            beta: next,
            growth_bound: Some(growth),
            rungs,
            good: entries(cx, &[], Some(&split.good)),
            bad: entries(cx, &split.bad, None),
            domain_size: map.values.len(),
            split,
        });
    }
    Ok(Ledger { seed_lip: l_seed, levels, map, delta })
}
