//! Brute-force and textbook reference implementations, written without
//! reusing library internals.

/// Dense tableau simplex for `max c·x` s.t. `A x <= b`, `x >= 0`, `b >= 0`.
/// Bland's rule, so it terminates on degenerate problems.
pub fn simplex_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> f64 {
    let m = a.len();
    let n = c.len();
    let w = n + m + 1;
    let mut t = vec![vec![0.0; w]; m + 1];
    for i in 0..m {
        assert!(b[i] >= -1e-12, "origin must be feasible");
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][w - 1] = b[i].max(0.0);
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let eps = 1e-12;
    while let Some(col) = (0..w - 1).find(|&j| t[m][j] < -eps) {
        let mut row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > eps {
                let ratio = t[i][w - 1] / t[i][col];
                let better = ratio < best - 1e-14
                    || (ratio <= best + 1e-14 && row.is_none_or(|r: usize| basis[i] < basis[r]));
                if better {
                    best = ratio;
                    row = Some(i);
                }
            }
        }
        let r = row.expect("LP is bounded");
        let piv = t[r][col];
        for v in t[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..=m {
            if i != r && t[i][col] != 0.0 {
                let f = t[i][col];
                let (src, dst) = if i < r {
                    let (lo, hi) = t.split_at_mut(r);
                    (&hi[0], &mut lo[i])
                } else {
                    let (lo, hi) = t.split_at_mut(i);
                    (&lo[r], &mut hi[0])
                };
                for j in 0..w {
                    dst[j] -= f * src[j];
                }
            }
        }
        basis[r] = col;
    }
    t[m][w - 1]
}

/// `F^{L,r}` by solving the primal witness LP directly.
pub fn flat_lr_oracle(d: &[Vec<f64>], base: usize, mu: &[f64], nu: &[f64], l: f64, r: f64) -> f64 {
    let n = d.len();
    let slack = 1e-12 * (1.0 + r);
    let inside: Vec<usize> = (0..n).filter(|&i| d[base][i] <= r + slack).collect();
    let outside: Vec<usize> = (0..n).filter(|&i| d[base][i] > r + slack).collect();
    // |g_i| <= cap_i encodes the box and g = 0 at outside points.
    let cap: Vec<f64> = inside
        .iter()
        .map(|&i| outside.iter().map(|&k| l * d[i][k]).fold(1.0, f64::min))
        .collect();
    let k = inside.len();
    // x_i = g_i + cap_i >= 0.
    let mut a = Vec::new();
    let mut b = Vec::new();
    for p in 0..k {
        let mut row = vec![0.0; k];
        row[p] = 1.0;
        a.push(row);
        b.push(2.0 * cap[p]);
        for q in 0..k {
            if p != q {
                let mut row = vec![0.0; k];
                row[p] = 1.0;
                row[q] = -1.0;
                a.push(row);
                b.push(l * d[inside[p]][inside[q]] + cap[p] - cap[q]);
            }
        }
    }
    let c: Vec<f64> = inside.iter().map(|&i| mu[i] - nu[i]).collect();
    let shift: f64 = c.iter().zip(&cap).map(|(ci, cp)| ci * cp).sum();
    if k == 0 {
        return 0.0;
    }
    simplex_max(&c, &a, &b) - shift
}

/// Oracle `F`: scan ε on a fine grid, then bisect the bracketing cell.
pub fn flat_oracle(d: &[Vec<f64>], base: usize, mu: &[f64], nu: &[f64]) -> f64 {
    if mu == nu {
        return 0.0;
    }
    let pred = |e: f64| flat_lr_oracle(d, base, mu, nu, 1.0 / e, 1.0 / e) < e;
    let mut lo = 0.0;
    let mut hi = 0.5;
    for k in 1..50 {
        let e = 0.5 * k as f64 / 50.0;
        if pred(e) {
            hi = e;
            break;
        }
        lo = e;
    }
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Random finite metric: points in the plane under ℓ∞, perturbed into a
/// generic metric by shortest-path closure of jittered distances.
pub fn random_metric(rng: &mut impl rand::Rng, n: usize, spread: f64) -> Vec<Vec<f64>> {
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(-spread..spread), rng.gen_range(-spread..spread)))
        .collect();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let base = (pts[i].0 - pts[j].0).abs().max((pts[i].1 - pts[j].1).abs());
            let v = base * rng.gen_range(1.0..1.3);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// `H_z` by brute force: the infimum is 0 or one of the values where some
/// containment can switch, so test just above each candidate.
pub fn hz_oracle(d: &[Vec<f64>], z: usize, a: &[usize], b: &[usize]) -> f64 {
    let covered = |e: f64, p: &[usize], q: &[usize]| {
        p.iter().all(|&i| d[z][i] > 1.0 / e || q.iter().any(|&j| d[i][j] <= e))
    };
    let mut cands = vec![0.0];
    for &i in a.iter().chain(b) {
        for &j in a.iter().chain(b) {
            cands.push(d[i][j]);
        }
        if d[z][i] > 0.0 {
            cands.push(1.0 / d[z][i]);
        }
    }
    cands.retain(|&c| c < 0.5);
    cands.sort_by(f64::total_cmp);
    for c in cands {
        let e = c * (1.0 + 1e-9) + 1e-12;
        if e < 0.5 && covered(e, a, b) && covered(e, b, a) {
            return c;
        }
    }
    0.5
}
