//! Uncapacitated transportation by successive shortest paths.
//!
//! Dense Dijkstra with node potentials on the bipartite residual graph. Meant
//! for metric costs on a few hundred to a couple of thousand nodes.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Transport {
    /// Optimal cost `Σ C[s][t] x[s][t]`.
    pub cost: f64,
    /// Dual potential of each sink; `-p_s` for sources satisfies
    /// `u_s + v_t <= C[s][t]` up to rounding.
    pub sink_potential: Vec<f64>,
    pub source_potential: Vec<f64>,
    /// Nonzero shipments `(source, sink, amount)`.
    pub shipments: Vec<(usize, usize, f64)>,
}

/// Ship `supply` to `demand` at minimum cost. Totals must agree up to rounding.
pub fn transport(supply: &[f64], demand: &[f64], cost: &dyn Fn(usize, usize) -> f64) -> Result<Transport> {
    let s_n = supply.len();
    let t_n = demand.len();
    let total_s: f64 = supply.iter().sum();
    let total_t: f64 = demand.iter().sum();
    let scale = total_s.max(total_t).max(f64::MIN_POSITIVE);
    if (total_s - total_t).abs() > 1e-9 * scale.max(1.0) {
        return Err(Error::Solver(format!("unbalanced transport: {total_s} vs {total_t}")));
    }
    if s_n == 0 || t_n == 0 {
        return Ok(Transport {
            cost: 0.0,
            sink_potential: vec![0.0; t_n],
            source_potential: vec![0.0; s_n],
            shipments: vec![],
        });
    }
    let c: Vec<f64> = (0..s_n * t_n).map(|k| cost(k / t_n, k % t_n)).collect();
    if let Some(k) = c.iter().position(|x| !x.is_finite()) {
        return Err(Error::Solver(format!("non-finite cost at ({}, {})", k / t_n, k % t_n)));
    }
    let eps = 1e-15 * scale;
    let mut rem_s = supply.to_vec();
    let mut rem_t = demand.to_vec();
    let mut x = vec![0.0f64; s_n * t_n];
    // Potentials: sources first, then sinks.
    let nv = s_n + t_n;
    let mut p = vec![0.0f64; nv];
    for t in 0..t_n {
        p[s_n + t] = (0..s_n).map(|s| c[s * t_n + t]).fold(f64::INFINITY, f64::min);
    }
    let mut dist = vec![f64::INFINITY; nv];
    let mut done = vec![false; nv];
    let mut pred = vec![usize::MAX; nv];
    let max_iter = 50 * nv * nv + 1000;
    let mut iter = 0;
    loop {
        let left: f64 = rem_s.iter().filter(|&&v| v > eps).sum();
        if left <= eps * (s_n as f64) {
            break;
        }
        iter += 1;
        if iter > max_iter {
            return Err(Error::Solver(format!("no convergence, residual supply {left}")));
        }
        dist.fill(f64::INFINITY);
        done.fill(false);
        pred.fill(usize::MAX);
        for s in 0..s_n {
            if rem_s[s] > eps {
                dist[s] = 0.0;
            }
        }
        let mut target = usize::MAX;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..nv {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u >= s_n {
                let t = u - s_n;
                if rem_t[t] > eps {
                    target = u;
                    break;
                }
                for s in 0..s_n {
                    if !done[s] && x[s * t_n + t] > 0.0 {
                        let rc = (p[u] - p[s] - c[s * t_n + t]).max(0.0);
                        let nd = best + rc;
                        if nd < dist[s] {
                            dist[s] = nd;
                            pred[s] = u;
                        }
                    }
                }
            } else {
                let row = &c[u * t_n..(u + 1) * t_n];
                for t in 0..t_n {
                    let v = s_n + t;
                    if !done[v] {
                        let rc = (row[t] + p[u] - p[v]).max(0.0);
                        let nd = best + rc;
                        if nd < dist[v] {
                            dist[v] = nd;
                            pred[v] = u;
                        }
                    }
                }
            }
        }
        if target == usize::MAX {
            return Err(Error::Solver("residual demand unreachable".into()));
        }
        let dt = dist[target];
        for v in 0..nv {
            p[v] += dist[v].min(dt);
        }
        // Bottleneck along the path back to a source with supply.
        let mut amt = rem_t[target - s_n];
        let mut v = target;
        while pred[v] != usize::MAX {
            let u = pred[v];
            if u >= s_n {
                // backward arc sink u -> source v
                amt = amt.min(x[v * t_n + (u - s_n)]);
            }
            v = u;
        }
        amt = amt.min(rem_s[v]);
        let start = v;
        let mut v = target;
        while pred[v] != usize::MAX {
            let u = pred[v];
            if u >= s_n {
                let k = v * t_n + (u - s_n);
                x[k] -= amt;
                if x[k] < eps {
                    x[k] = 0.0;
                }
            } else {
                x[u * t_n + (v - s_n)] += amt;
            }
            v = u;
        }
        rem_s[start] -= amt;
        rem_t[target - s_n] -= amt;
    }
    let mut total = 0.0;
    let mut shipments = Vec::new();
    for s in 0..s_n {
        for t in 0..t_n {
            let a = x[s * t_n + t];
            if a > 0.0 {
                total += a * c[s * t_n + t];
                shipments.push((s, t, a));
            }
        }
    }
    Ok(Transport {
        cost: total,
        sink_potential: p[s_n..].to_vec(),
        source_potential: p[..s_n].iter().map(|v| -v).collect(),
        shipments,
    })
}
