//! Shared numeric tolerances.

/// Default absolute tolerance for certificate comparisons.
pub const TOL: f64 = 1e-9;

/// Additive slack used when validating triangle inequalities.
pub const TRIANGLE_TOL: f64 = 1e-12;

/// Relative slack for closed-ball and threshold predicates. Large enough to absorb
/// rounding in computed distances, small enough to never matter geometrically.
pub const REL: f64 = 1e-12;

/// `a <= b` up to rounding.
#[inline]
pub fn le(a: f64, b: f64) -> bool {
    a <= b + REL * (1.0 + a.abs().max(b.abs()))
}

/// `a < b` strictly, beyond rounding.
#[inline]
pub fn lt(a: f64, b: f64) -> bool {
    !le(b, a)
}

/// Values treated as equal up to rounding.
#[inline]
pub fn close(a: f64, b: f64) -> bool {
    le(a, b) && le(b, a)
}
