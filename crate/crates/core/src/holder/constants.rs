//! Scale constants of the multiscale construction.

use serde::Serialize;

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct Constants {
    pub k: f64,
    pub gamma: f64,
    pub eta: f64,
    pub n: usize,
    /// Exponent of the level ratio `l = 2^{-N}`.
    pub big_n: u32,
    pub alpha: f64,
    pub l: f64,
    /// `(5K²)^n`.
    pub sigma: f64,
    /// Smallest integer above `2/α`.
    pub big_m: u32,
    /// `(50 σ^M l^{-α})^n / η`.
    pub lambda: f64,
}

/// Choose `N` minimal with `(5K²)^n ≤ 2^{N(1-γ)}` and solve `(5K²)^n = 2^{N(1-α)}` for `α`.
pub fn solve_constants(k: f64, gamma: f64, n: usize, eta: f64) -> Result<Constants> {
    if !(k >= 1.0 && k.is_finite()) || !(gamma > 0.0 && gamma < 1.0) || !(eta > 0.0 && eta.is_finite()) || n == 0 {
        return domain(format!("need K ≥ 1, 0 < γ < 1, η > 0, n ≥ 1; got K = {k}, γ = {gamma}, η = {eta}, n = {n}"));
    }
    let log_sigma = n as f64 * (5.0 * k * k).log2();
    let need = log_sigma / (1.0 - gamma);
    let mut big_n = (need - 1e-12).ceil().max(1.0) as u32;
    while (big_n as f64) * (1.0 - gamma) < log_sigma * (1.0 - 1e-12) {
        big_n += 1;
    }
    while big_n > 1 && ((big_n - 1) as f64) * (1.0 - gamma) >= log_sigma * (1.0 + 1e-12) {
        big_n -= 1;
    }
    let alpha = 1.0 - log_sigma / big_n as f64;
    let sigma = (5.0 * k * k).powi(n as i32);
    let l = 2f64.powi(-(big_n as i32));
    let big_m = (2.0 / alpha).floor() as u32 + 1;
    let lambda = (50.0 * sigma.powi(big_m as i32) * l.powf(-alpha)).powi(n as i32) / eta;
    let c = Constants { k, gamma, eta, n, big_n, alpha, l, sigma, big_m, lambda };
    c.check()?;
    Ok(c)
}

impl Constants {
    /// `σ^{i+1} l^i < 1/2`, the budget bound that keeps charts inside their balls.
    pub fn beta_bound_holds(&self, i: u32) -> bool {
        (i as f64 + 1.0) * self.sigma.log2() - ((i * self.big_n) as f64) < -1.0
    }

    fn check(&self) -> Result<()> {
        let lhs = self.sigma * self.l;
        let rhs = self.l.powf(self.alpha);
        if (lhs - rhs).abs() > 1e-12 * rhs {
            return Err(Error::Internal(format!("σl = {lhs} differs from l^α = {rhs}")));
        }
        if self.alpha + 1e-12 < self.gamma {
            return Err(Error::Internal(format!("α = {} below γ = {}", self.alpha, self.gamma)));
        }
        for i in self.big_m..self.big_m + 64 {
            if !self.beta_bound_holds(i) {
                return Err(Error::Internal(format!("budget bound fails at level {i}")));
            }
        }
        Ok(())
    }
}
