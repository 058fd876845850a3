//! Brute-force references for ε-isometries and couplings on small spaces.

use mmgeo::alignment::Coupling;

fn le(a: f64, b: f64) -> bool {
    a <= b + 1e-12 * (1.0 + b.abs())
}

/// Every ε-isometry (restricted to the window) found by plain backtracking,
/// up to `cap` maps. Returns `(maps, complete)`.
pub fn all_maps(dl: &[Vec<f64>], x: usize, dr: &[Vec<f64>], y: usize, eps: f64, cap: usize) -> (Vec<Vec<(usize, usize)>>, bool) {
    let window: Vec<usize> = (0..dl.len()).filter(|&a| le(dl[x][a], 1.0 / eps)).collect();
    let cover: Vec<usize> = (0..dr.len()).filter(|&t| 1.0 / eps - eps >= 0.0 && le(dr[y][t], 1.0 / eps - eps)).collect();
    let mut out = Vec::new();
    let mut assign = vec![usize::MAX; dl.len()];
    assign[x] = y;
    let rest: Vec<usize> = window.iter().copied().filter(|&a| a != x).collect();
    fn go(
        k: usize,
        rest: &[usize],
        x: usize,
        window: &[usize],
        cover: &[usize],
        dl: &[Vec<f64>],
        dr: &[Vec<f64>],
        eps: f64,
        assign: &mut Vec<usize>,
        out: &mut Vec<Vec<(usize, usize)>>,
        cap: usize,
    ) -> bool {
        if k == rest.len() {
            let ok = cover.iter().all(|&t| window.iter().any(|&a| le(dr[t][assign[a]], eps)));
            if ok {
                let mut m: Vec<(usize, usize)> = window.iter().map(|&a| (a, assign[a])).collect();
                m.sort_unstable();
                out.push(m);
            }
            return out.len() < cap;
        }
        let a = rest[k];
        for t in 0..dr.len() {
            let fine = std::iter::once(x)
                .chain(rest[..k].iter().copied())
                .all(|b| le((dr[t][assign[b]] - dl[a][b]).abs(), eps));
            if fine {
                assign[a] = t;
                if !go(k + 1, rest, x, window, cover, dl, dr, eps, assign, out, cap) {
                    return false;
                }
            }
        }
        assign[a] = usize::MAX;
        true
    }
    let complete = go(0, &rest, x, &window, &cover, dl, dr, eps, &mut assign, &mut out, cap);
    (out, complete)
}

pub fn feasible(dl: &[Vec<f64>], x: usize, dr: &[Vec<f64>], y: usize, eps: f64) -> bool {
    !all_maps(dl, x, dr, y, eps, 1).0.is_empty()
}

/// Smallest ε admitting an ε-isometry, or the infimum when it is not attained.
///
/// Feasibility need not be monotone in ε, but it can only change where ε
/// crosses a distortion, a cover distance or a window radius, so testing each
/// breakpoint and each gap between consecutive breakpoints is exhaustive.
pub fn eps_star_exact(dl: &[Vec<f64>], x: usize, dr: &[Vec<f64>], y: usize) -> f64 {
    let mut crit = vec![0.0, 1.0];
    for ra in dl {
        for &u in ra {
            for rs in dr {
                crit.extend(rs.iter().map(|&v| (u - v).abs()));
            }
        }
    }
    crit.extend(dr.iter().flatten().copied());
    crit.extend(dl[x].iter().filter(|&&v| v > 0.0).map(|&v| 1.0 / v));
    crit.extend(dr[y].iter().map(|&t| ((t * t + 4.0).sqrt() - t) / 2.0));
    crit.sort_by(f64::total_cmp);
    crit.dedup();
    for (i, &c) in crit.iter().enumerate() {
        let next = crit.get(i + 1).copied().unwrap_or(c + 2.0);
        if (c > 0.0 && feasible(dl, x, dr, y, c)) || feasible(dl, x, dr, y, 0.5 * (c + next)) {
            return c;
        }
    }
    unreachable!("large ε always admits the base-only map")
}

/// Dense glued matrix of a coupling: left points first, then the non-base
/// right points in order.
pub fn glued(c: &Coupling, dl: &[Vec<f64>], dr: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let (n, m) = (dl.len(), dr.len());
    let (x, y) = (c.left_base, c.right_base);
    let mut slot = vec![0; m];
    let mut next = n;
    for (j, s) in slot.iter_mut().enumerate() {
        if j == y {
            *s = x;
        } else {
            *s = next;
            next += 1;
        }
    }
    let size = next;
    let mut d = vec![vec![0.0; size]; size];
    for i in 0..n {
        for k in 0..n {
            d[i][k] = dl[i][k];
        }
    }
    for j in 0..m {
        for k in 0..m {
            d[slot[j]][slot[k]] = dr[j][k];
        }
        for i in 0..n {
            let v = if j == y { dl[i][x] } else { c.get(i, j) };
            d[i][slot[j]] = v;
            d[slot[j]][i] = v;
        }
    }
    (d, slot)
}

pub fn worst_triangle_excess(d: &[Vec<f64>]) -> f64 {
    let n = d.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                worst = worst.max(d[i][j] - d[i][k] - d[k][j]);
            }
        }
    }
    worst
}
