use serde::{Deserialize, Serialize};

use crate::error::{HodgeError, Result};

/// `x_k = C Σ_{i=1}^{k-1} x_i x_{k-i}`, dominating `‖φ_k‖` whenever `C`
/// bounds `‖½∂̄*G[a,b]‖ ≤ C‖a‖‖b‖`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorantSeries {
    pub c: f64,
    pub x1: f64,
    /// `x_1 … x_M`.
    pub coefficients: Vec<f64>,
}

/// Relative slack of the radius predicate, absorbing the rounding of
/// `1/(4C)` itself.
const RADIUS_SLACK: f64 = 1e-12;

pub fn majorant(c: f64, x1: f64, max_degree: usize) -> Result<MajorantSeries> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(HodgeError::invalid(format!("majorant constant must be non-negative, got {c}")));
    }
    if !(x1 > 0.0 && x1.is_finite()) {
        return Err(HodgeError::invalid(format!("x₁ must be positive, got {x1}")));
    }
    let mut x = Vec::with_capacity(max_degree);
    if max_degree >= 1 {
        x.push(x1);
    }
    for k in 2..=max_degree {
        let s: f64 = (1..k).map(|i| x[i - 1] * x[k - i - 1]).sum();
        x.push(c * s);
    }
    Ok(MajorantSeries { c, x1, coefficients: x })
}

impl MajorantSeries {
    pub fn coefficient(&self, k: usize) -> f64 {
        if k == 0 { 0.0 } else { self.coefficients.get(k - 1).copied().unwrap_or(0.0) }
    }

    /// Analytic radius `τ* = 1/(4 C x₁)`.
    pub fn radius(&self) -> f64 {
        if self.c == 0.0 { f64::INFINITY } else { 1.0 / (4.0 * self.c * self.x1) }
    }

    /// Whether `x₁τ ≤ 1/(4C)`, i.e. the majorant converges at `τ`.
    pub fn accepts(&self, x1_tau: f64) -> bool {
        self.c == 0.0 || x1_tau <= (1.0 / (4.0 * self.c)) * (1.0 + RADIUS_SLACK)
    }

    /// `Σ_{k≥lo} x_k τ^k` over the stored coefficients.
    pub fn partial_sum(&self, tau: f64, lo: usize) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .skip(lo.saturating_sub(1))
            .map(|(i, x)| x * tau.powi(i as i32 + 1))
            .sum()
    }

    /// Smallest `τ` at which the tail `S^{≥2}(τ)` reaches `½x₁τ`; for the
    /// untruncated series this is `2/(9 C x₁)`. Infinite when the tail stays
    /// below within the stored degree.
    pub fn empirical_eps1(&self) -> f64 {
        let excess = |tau: f64| self.partial_sum(tau, 2) - 0.5 * self.x1 * tau;
        if self.c == 0.0 || self.coefficients.len() < 2 {
            return f64::INFINITY;
        }
        // excess/τ is increasing in τ; bracket its root then bisect
        let mut hi = self.radius();
        let mut grow = 0;
        while excess(hi) < 0.0 {
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) < 0.0 { lo = mid } else { hi = mid }
        }
        hi
    }
}
