//! Hausdorff content of finite sets and its cell-aggregated surrogate.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::space::{Norm, PointedSpace};
use crate::tol;

/// Largest target `content` enumerates exactly.
pub const EXACT_MAX: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverMode {
    GreedyUpper,
    ExactSmall,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Piece {
    pub members: Vec<usize>,
    pub diam: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverEstimate {
    pub s: f64,
    /// Mesh cap; infinite for the content `H^s_∞`.
    pub delta: f64,
    pub value: f64,
    pub cover: Vec<Piece>,
    pub mode: CoverMode,
}

/// `diam^s`, with `0^0 = 1` so that `s = 0` counts pieces.
pub fn piece_cost(diam: f64, s: f64) -> f64 {
    if s == 0.0 {
        1.0
    } else {
        diam.powf(s)
    }
}

fn check(s: f64, delta: f64) -> Result<()> {
    if !(s >= 0.0 && s.is_finite()) {
        return domain(format!("exponent {s} must be finite and non-negative"));
    }
    if !(delta > 0.0) {
        return domain(format!("mesh {delta} must be positive or infinite"));
    }
    Ok(())
}

/// `H^s_δ` of a finite target, either exactly (up to [`EXACT_MAX`] points) or
/// by greedy merging from singletons.
pub fn content(space: &PointedSpace, target: &[usize], s: f64, delta: f64, mode: CoverMode) -> Result<CoverEstimate> {
    check(s, delta)?;
    space.check_indices(target)?;
    let mut t = target.to_vec();
    t.sort_unstable();
    t.dedup();
    let cover = if t.is_empty() {
        Vec::new()
    } else {
        match mode {
            CoverMode::ExactSmall => exact(space, &t, s, delta)?,
            CoverMode::GreedyUpper => greedy(space, &t, s, delta),
        }
    };
    let mut value: f64 = cover.iter().map(|p| piece_cost(p.diam, s)).sum();
    let mut cover = cover;
    if !t.is_empty() {
        let whole = space.diam(&t);
        if tol::le(whole, delta) && piece_cost(whole, s) < value {
            value = piece_cost(whole, s);
            cover = vec![Piece { members: t, diam: whole }];
        }
    }
    Ok(CoverEstimate { s, delta, value, cover, mode })
}

fn exact(space: &PointedSpace, t: &[usize], s: f64, delta: f64) -> Result<Vec<Piece>> {
    let n = t.len();
    if n > EXACT_MAX {
        return domain(format!("exact content handles at most {EXACT_MAX} points, got {n}"));
    }
    let full = (1usize << n) - 1;
    let mut diam = vec![0.0f64; full + 1];
    for mask in 1..=full {
        let i = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let mut d = diam[rest];
        let mut r = rest;
        while r != 0 {
            let j = r.trailing_zeros() as usize;
            d = d.max(space.d(t[i], t[j]));
            r &= r - 1;
        }
        diam[mask] = d;
    }
    let mut best = vec![f64::INFINITY; full + 1];
    let mut choice = vec![0usize; full + 1];
    best[0] = 0.0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let others = mask ^ low;
        // Submasks of `others`, each joined with the lowest bit.
        let mut sub = others;
        loop {
            let piece = sub | low;
            if tol::le(diam[piece], delta) {
                let v = piece_cost(diam[piece], s) + best[mask ^ piece];
                if v < best[mask] {
                    best[mask] = v;
                    choice[mask] = piece;
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
    }
    let mut out = Vec::new();
    let mut mask = full;
    while mask != 0 {
        let piece = choice[mask];
        let members = (0..n).filter(|&b| piece >> b & 1 == 1).map(|b| t[b]).collect();
        out.push(Piece { members, diam: diam[piece] });
        mask ^= piece;
    }
    Ok(out)
}

/// Complete-linkage merging while a merge lowers `Σ diam^s` within the cap.
fn greedy(space: &PointedSpace, t: &[usize], s: f64, delta: f64) -> Vec<Piece> {
    let n = t.len();
    let mut members: Vec<Vec<usize>> = t.iter().map(|&i| vec![i]).collect();
    let mut diam = vec![0.0f64; n];
    let mut alive = vec![true; n];
    let mut link: Vec<Vec<f64>> = (0..n).map(|a| (0..n).map(|b| space.d(t[a], t[b])).collect()).collect();
    loop {
        let mut best = (0.0, usize::MAX, usize::MAX);
        for a in 0..n {
            if !alive[a] {
                continue;
            }
            for b in a + 1..n {
                if !alive[b] {
                    continue;
                }
                let d = diam[a].max(diam[b]).max(link[a][b]);
                if !tol::le(d, delta) {
                    continue;
                }
                let gain = piece_cost(diam[a], s) + piece_cost(diam[b], s) - piece_cost(d, s);
                if gain > best.0 {
                    best = (gain, a, b);
                }
            }
        }
        let (gain, a, b) = best;
        if !(gain > 1e-15) {
            break;
        }
        diam[a] = diam[a].max(diam[b]).max(link[a][b]);
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        members[a].sort_unstable();
        alive[b] = false;
        for c in 0..n {
            let v = link[a][c].max(link[b][c]);
            link[a][c] = v;
            link[c][a] = v;
        }
    }
    (0..n)
        .filter(|&a| alive[a])
        .map(|a| Piece { members: std::mem::take(&mut members[a]), diam: diam[a] })
        .collect()
}

/// Box-counting surrogate: bin the target's coordinates into cells of
/// diameter `mesh` and charge each occupied cell `mesh^s`.
///
/// Pieces record the sample points of each cell together with the cell's
/// diameter, so the cover is a valid ambient cover at mesh `mesh`.
pub fn aggregated_content(space: &PointedSpace, target: &[usize], s: f64, mesh: f64) -> Result<CoverEstimate> {
    check(s, mesh)?;
    if !mesh.is_finite() {
        return domain("cell aggregation needs a finite mesh");
    }
    space.check_indices(target)?;
    let Some(cloud) = space.cloud() else {
        return domain("cell aggregation needs point coordinates");
    };
    let side = match cloud.norm {
        Norm::Linf => mesh,
        Norm::L2 => mesh / (cloud.dim as f64).sqrt(),
    };
    let coords: Vec<Vec<f64>> = target.iter().map(|&i| space.coords(i).expect("cloud")).collect();
    let origin: Vec<f64> = (0..cloud.dim)
        .map(|c| coords.iter().map(|p| p[c]).fold(f64::INFINITY, f64::min))
        .collect();
    let mut cells: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for (p, &i) in coords.iter().zip(target) {
        let key = p.iter().zip(&origin).map(|(x, o)| ((x - o) / side).floor() as i64).collect();
        cells.entry(key).or_default().push(i);
    }
    let cover: Vec<Piece> = cells
        .into_values()
        .map(|mut members| {
            members.sort_unstable();
            members.dedup();
            Piece { members, diam: mesh }
        })
        .collect();
    let value = cover.len() as f64 * piece_cost(mesh, s);
    Ok(CoverEstimate { s, delta: mesh, value, cover, mode: CoverMode::GreedyUpper })
}
