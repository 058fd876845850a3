//! Inf-convolution extension of Hölder data.

use crate::error::{domain, Error, Result};
use crate::par;
use crate::space::PointedSpace;
use crate::tol;

/// Largest violation of `|f(a) − f(b)| ≤ H d(a,b)^α` over the known pairs.
pub(crate) fn holder_violation<D>(known: &[(usize, f64)], alpha: f64, h: f64, d: &D) -> Option<(usize, usize, f64, f64)>
where
    D: Fn(usize, usize) -> f64 + Sync,
{
    let worst = par::map_range(known.len(), |i| {
        let (a, fa) = known[i];
        let mut worst: Option<(usize, usize, f64, f64)> = None;
        for &(b, fb) in &known[i + 1..] {
            let lhs = (fa - fb).abs();
            let rhs = h * d(a, b).powf(alpha);
            if !tol::le(lhs, rhs) && worst.is_none_or(|w| lhs - rhs > w.2 - w.3) {
                worst = Some((a, b, lhs, rhs));
            }
        }
        worst
    });
    worst.into_iter().flatten().fold(None, |acc: Option<(usize, usize, f64, f64)>, w| match acc {
        Some(a) if a.2 - a.3 >= w.2 - w.3 => Some(a),
        _ => Some(w),
    })
}

/// Clamped McShane extension over `0..n` with distance `d`.
pub(crate) fn extend_with<D>(n: usize, known: &[(usize, f64)], alpha: f64, h: f64, d: &D) -> Vec<f64>
where
    D: Fn(usize, usize) -> f64 + Sync,
{
    let lo = known.iter().map(|k| k.1).fold(f64::INFINITY, f64::min);
    let hi = known.iter().map(|k| k.1).fold(f64::NEG_INFINITY, f64::max);
    let mut fixed = vec![None; n];
    for &(a, fa) in known {
        fixed[a] = Some(fa);
    }
    par::map_range(n, |y| {
        if let Some(v) = fixed[y] {
            return v;
        }
        let inf = known.iter().map(|&(a, fa)| fa + h * d(a, y).powf(alpha)).fold(f64::INFINITY, f64::min);
        inf.clamp(lo, hi)
    })
}

/// Extend `values` (known where `Some`) to every point of `space`.
///
/// `F(y) = clamp(min_x f(x) + H d(x,y)^α)` into the range of the data. The
/// input must itself be `(α, H)`-Hölder; the witness pair is reported if not.
pub fn mcshane_extend(space: &PointedSpace, values: &[Option<f64>], alpha: f64, h: f64) -> Result<Vec<f64>> {
    if values.len() != space.len() {
        return domain(format!("{} values for {} points", values.len(), space.len()));
    }
    if !(alpha > 0.0 && alpha <= 1.0) || !(h >= 0.0 && h.is_finite()) {
        return domain(format!("need 0 < α ≤ 1 and H ≥ 0; got α = {alpha}, H = {h}"));
    }
    let known: Vec<(usize, f64)> = values.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    if known.is_empty() {
        return domain("nothing to extend from");
    }
    if let Some(&(i, v)) = known.iter().find(|k| !k.1.is_finite()) {
        return domain(format!("value {v} at point {i} is not finite"));
    }
    let d = |a: usize, b: usize| space.d(a, b);
    if let Some((a, b, lhs, rhs)) = holder_violation(&known, alpha, h, &d) {
        return Err(Error::Precondition(format!("points {a} and {b}: |f(a) − f(b)| = {lhs} exceeds H d^α = {rhs}")));
    }
    Ok(extend_with(space.len(), &known, alpha, h, &d))
}

/// Coordinatewise extension of vector data; the sup-norm constant is preserved.
pub fn mcshane_extend_vec(space: &PointedSpace, values: &[Option<Vec<f64>>], alpha: f64, h: f64) -> Result<Vec<Vec<f64>>> {
    let dim = match values.iter().flatten().next() {
        Some(v) => v.len(),
        None => return domain("nothing to extend from"),
    };
    if values.iter().flatten().any(|v| v.len() != dim) {
        return domain("vector values of mixed length");
    }
    let mut cols = Vec::with_capacity(dim);
    for j in 0..dim {
        let col: Vec<Option<f64>> = values.iter().map(|v| v.as_ref().map(|v| v[j])).collect();
        cols.push(mcshane_extend(space, &col, alpha, h)?);
    }
    Ok((0..space.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect())
}
