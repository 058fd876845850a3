//! Randomized end-to-end checks of the alignment sandwiches, shared by the
//! property tests and the acceptance run. Each returns `Err` with a reason.

use super::iso::{all_maps, eps_star_exact, glued, worst_triangle_excess};
use super::oracle::{flat_lr_oracle, hz_oracle, random_metric};
use mmgeo::alignment::{
    coupling_flat, coupling_from_eps_isometry, coupling_hz, dstar_sandwich, eps_isometry_from_hausdorff,
    estimate_dpgh, estimate_dpmgh, estimate_dstar, extract_large_subsets, Budget, Coupling, EpsIsometry, Method,
    Provenance, DEFAULT_DELTA,
};
use mmgeo::{MeasuredSpace, PointedSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn closure(d: &mut [Vec<f64>]) {
    let n = d.len();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
}

/// A left metric and a right one that is either a jittered, possibly
/// trimmed copy or unrelated.
pub fn random_pair(rng: &mut ChaCha8Rng, max_n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = rng.gen_range(1..=max_n);
    let spread = rng.gen_range(0.2..3.0);
    let dl = random_metric(rng, n, spread);
    let dr = if n > 1 && rng.gen_bool(0.6) {
        let jitter = rng.gen_range(0.0..0.2);
        let mut keep: Vec<usize> = (0..n).filter(|&i| i == 0 || !rng.gen_bool(0.15)).collect();
        keep.dedup();
        let mut d: Vec<Vec<f64>> = keep.iter().map(|&i| keep.iter().map(|&j| dl[i][j]).collect()).collect();
        for i in 0..d.len() {
            for j in i + 1..d.len() {
                let v = d[i][j] * (1.0f64 + rng.gen_range(-jitter..=jitter)).max(0.05);
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        closure(&mut d);
        d
    } else {
        let m = rng.gen_range(1..=max_n);
        let spread = rng.gen_range(0.2..3.0);
        random_metric(rng, m, spread)
    };
    (dl, dr)
}

fn space(d: &[Vec<f64>]) -> PointedSpace {
    PointedSpace::from_matrix(d, 0).expect("random metric is valid")
}

/// Brute-force `H` of a coupling, after checking it glues to a metric.
fn coupling_value(c: &Coupling, dl: &[Vec<f64>], dr: &[Vec<f64>]) -> Result<f64, String> {
    for (i, row) in dl.iter().enumerate() {
        if (c.get(i, c.right_base) - row[c.left_base]).abs() > 1e-9 {
            return Err(format!("basepoint row mismatch at {i}"));
        }
    }
    let (d, slot) = glued(c, dl, dr);
    let excess = worst_triangle_excess(&d);
    if excess > 1e-9 {
        return Err(format!("glued matrix breaks the triangle inequality by {excess}"));
    }
    let left: Vec<usize> = (0..dl.len()).collect();
    Ok(hz_oracle(&d, c.left_base, &left, &slot))
}

fn check_map(dl: &[Vec<f64>], dr: &[Vec<f64>], map: &[(usize, usize)], eps: f64) -> Result<(), String> {
    let slack = |b: f64| b + 1e-12 * (1.0 + b);
    let img = |a: usize| map.iter().find(|p| p.0 == a).map(|p| p.1);
    if img(0) != Some(0) {
        return Err("base not preserved".into());
    }
    for a in (0..dl.len()).filter(|&a| dl[0][a] <= slack(1.0 / eps)) {
        let Some(fa) = img(a) else { return Err(format!("window point {a} unmapped")) };
        for &(b, fb) in map {
            if (dr[fa][fb] - dl[a][b]).abs() > slack(eps) {
                return Err(format!("distortion too large at ({a}, {b})"));
            }
        }
    }
    let inner = 1.0 / eps - eps;
    for t in (0..dr.len()).filter(|&t| inner >= 0.0 && dr[0][t] <= slack(inner)) {
        if !map.iter().any(|&(_, ft)| dr[t][ft] <= slack(eps)) {
            return Err(format!("right point {t} not covered"));
        }
    }
    Ok(())
}

/// Exact-small `d_pGH` interval against brute force.
pub fn dpgh_case(seed: u64, max_n: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dl, dr) = random_pair(&mut rng, max_n);
    let (ls, rs) = (space(&dl), space(&dr));
    let est = estimate_dpgh(&ls, &rs, &Budget::default()).map_err(|e| e.to_string())?;
    if !(est.lower <= est.upper) {
        return Err(format!("interval inverted: {} > {}", est.lower, est.upper));
    }
    let hw = coupling_value(&est.witness_upper, &dl, &dr)?;
    if (hw - est.upper).abs() > 1e-12 {
        return Err(format!("witness coupling has H = {hw}, reported {}", est.upper));
    }
    let star = est.eps_star.ok_or("exact search did not run")?;
    let exact = eps_star_exact(&dl, 0, &dr, 0);
    if (star - exact).abs() > 1e-9 {
        return Err(format!("ε* = {star}, brute force gives {exact}"));
    }
    let weps = est.witness_eps.ok_or("no witness ε")?;
    let (maps, complete) = all_maps(&dl, 0, &dr, 0, weps, 4000);
    if maps.is_empty() {
        return Err(format!("no ε-isometry at witness ε = {weps}"));
    }
    let mut v_ex = coupling_value(&Coupling::star(&ls, &rs), &dl, &dr)?;
    for m in &maps {
        let c = Coupling::from_partial_map(&ls, &rs, m).map_err(|e| e.to_string())?;
        v_ex = v_ex.min(coupling_value(&c, &dl, &dr)?);
    }
    if est.lower > v_ex + 1e-12 {
        return Err(format!("lower {} exceeds exhaustive optimum {v_ex}", est.lower));
    }
    if complete && est.upper < v_ex - 1e-12 {
        return Err(format!("upper {} below exhaustive optimum {v_ex}", est.upper));
    }
    if complete && est.method == Method::ExactSmall && (est.upper - v_ex).abs() > 1e-12 {
        return Err(format!("complete search gave {} but exhaustive optimum is {v_ex}", est.upper));
    }
    if v_ex > 2.0 * weps + 1e-9 {
        return Err(format!("exhaustive optimum {v_ex} above 2ε = {}", 2.0 * weps));
    }
    // Map from a small Hausdorff distance passes at 2ε.
    let eps = est.upper + 1e-7;
    if eps < 0.5 {
        let g = est.witness_upper.glue(&ls, &rs);
        let hi = eps_isometry_from_hausdorff(&g.host, &g.left_idx, &g.right_idx, eps).map_err(|e| e.to_string())?;
        // Sub-space positions coincide with the original indices on both sides.
        check_map(&dl, &dr, &hi.iso.map, 2.0 * eps)?;
    }
    // Coupling from an ε-isometry is a metric with H ≤ 2ε.
    let iso = EpsIsometry::new(weps, maps[0].clone(), Provenance::User);
    let c = coupling_from_eps_isometry(&ls, &rs, &iso).map_err(|e| e.to_string())?;
    let h = coupling_value(&c, &dl, &dr)?;
    if h > 2.0 * weps + 1e-9 {
        return Err(format!("coupling from ε-isometry has H = {h} > 2ε"));
    }
    Ok(())
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.0..scale) }).collect()
}

fn glued_measures(c: &Coupling, dl: &[Vec<f64>], dr: &[Vec<f64>], mu: &[f64], nu: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>, Vec<usize>) {
    let (d, slot) = glued(c, dl, dr);
    let mut a = vec![0.0; d.len()];
    let mut b = vec![0.0; d.len()];
    a[..mu.len()].copy_from_slice(mu);
    for (j, &w) in nu.iter().enumerate() {
        b[slot[j]] += w;
    }
    (d, a, b, slot)
}

/// Subset extraction and both directions of the `d_*` comparison.
pub fn dstar_case(seed: u64, max_n: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dl, dr) = random_pair(&mut rng, max_n);
    let scale = rng.gen_range(0.05..0.6);
    let mu = random_weights(&mut rng, dl.len(), scale);
    let nu = if dl.len() == dr.len() && rng.gen_bool(0.5) {
        mu.iter().map(|&w| (w * (1.0 + rng.gen_range(-0.1..0.1))).max(0.0)).collect()
    } else {
        random_weights(&mut rng, dr.len(), scale)
    };
    let left = MeasuredSpace::new(space(&dl), mu.clone()).map_err(|e| e.to_string())?;
    let right = MeasuredSpace::new(space(&dr), nu.clone()).map_err(|e| e.to_string())?;
    let budget = Budget { exact_max: 6, map_limit: 32, local_steps: 8, restarts: 4, flat_tol: 1e-7, ..Budget::default() };
    let ds = estimate_dstar(&left, &right, &budget, &[]).map_err(|e| e.to_string())?;
    let pm = estimate_dpmgh(&left, &right, &budget, &[]).map_err(|e| e.to_string())?;
    if !(ds.lower <= ds.upper && pm.lower <= pm.upper) {
        return Err("inverted interval".into());
    }
    coupling_value(&ds.witness_upper, &dl, &dr)?;
    let hp = coupling_value(&pm.witness_upper, &dl, &dr)?;
    if (hp - coupling_hz(&left.space, &right.space, &pm.witness_upper)).abs() > 1e-12 {
        return Err("H of the pmGH witness disagrees with brute force".into());
    }
    let fp = coupling_flat(&left, &right, &pm.witness_upper, 1e-7).map_err(|e| e.to_string())?.1;
    if fp > pm.upper + 1e-12 {
        return Err(format!("G01 = {fp} above G11 = {} on the same coupling", pm.upper));
    }

    // Subset extraction at a random scale, checked by brute force.
    let eps = rng.gen_range(0.05..0.45);
    let r = eps + rng.gen_range(0.05..4.0);
    let c = &ds.witness_upper;
    let p = extract_large_subsets(&left, &right, c, r, eps, DEFAULT_DELTA).map_err(|e| e.to_string())?;
    let (d, a, b, slot) = glued_measures(c, &dl, &dr, &mu, &nu);
    let f = flat_lr_oracle(&d, 0, &a, &b, 1.0 / eps, r);
    let in_ball = |h: usize| d[0][h] <= r + 1e-12 * (1.0 + r);
    let defect_mu: f64 = (0..dl.len()).filter(|&i| in_ball(i) && !p.k_mu.contains(&i)).map(|i| mu[i]).sum();
    let defect_nu: f64 = (0..dr.len()).filter(|&j| in_ball(slot[j]) && !p.k_nu.contains(&j)).map(|j| nu[j]).sum();
    for (defect, reported) in [(defect_mu, p.mass_defect_mu), (defect_nu, p.mass_defect_nu)] {
        if (defect - reported).abs() > 1e-12 {
            return Err(format!("defect {reported} reported, {defect} recomputed"));
        }
        let ok = if f > 1e-9 { defect < (1.0 + DEFAULT_DELTA) * f + 1e-9 } else { defect <= 1e-9 };
        if !ok {
            return Err(format!("defect {defect} vs F = {f}"));
        }
    }
    let ku: Vec<usize> = p.k_nu.iter().map(|&j| slot[j]).collect();
    let hk = hz_oracle(&d, 0, &p.k_mu, &ku);
    let bound = (1.0 / (r - eps)).max(eps);
    if hk > bound + 1e-12 {
        return Err(format!("H(K_μ, K_ν) = {hk} above {bound}"));
    }

    // Two-sided d_* sandwich just above the best flat value.
    let level = ds.upper * 1.05 + 0.005;
    if level < 0.5 {
        let rep = dstar_sandwich(&left, &right, level, &budget, std::slice::from_ref(&ds.witness_upper)).map_err(|e| e.to_string())?;
        let fw = rep.forward.as_ref().ok_or("forward direction inconclusive")?;
        if !fw.pass {
            return Err(format!("forward certificate failed: {:?}", (fw.defect_mu, fw.defect_nu, fw.hz, fw.flat_k)));
        }
        if fw.hz > 2.0 * level + 1e-12 || fw.flat_k >= 3.0 * level + 1e-6 {
            return Err("forward bounds exceeded".into());
        }
        let cv = rep.converse.as_ref().ok_or("converse missing")?;
        if !cv.pass {
            return Err(format!("converse failed: {cv:?}"));
        }
    }
    Ok(())
}
