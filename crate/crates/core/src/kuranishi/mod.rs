//! Kuranishi power series `φ(t) = Σ φ_I t^I` solving the Maurer–Cartan
//! equation `∂̄φ = ½[φ,φ]` modulo the harmonic obstruction.
//!
//! Given a harmonic basis `θ₁…θ_N` of degree-1 forms, the linear part is
//! `Σ θ_j t_j` and each higher coefficient is
//!
//! ```text
//! φ_I = ½ ∂̄* G Σ_I,    Σ_I = Σ_{J+K=I, J,K≠0} [φ_J, φ_K]
//! ```
//!
//! so that `∂̄φ_I = ½(Σ_I − H Σ_I)`. The series of `H Σ_I` is the obstruction.

mod estimates;
mod majorant;
mod volume;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dolbeault::DolbeaultComplex;
use crate::error::{HodgeError, Result};
use crate::series::{Linear, MultiIndex, TruncatedSeries};

pub use estimates::{verify_estimates, EstimateReport, EstimateSample};
pub use majorant::{majorant, MajorantSeries};
pub use volume::{closedness_defect, volume_family, wp_distance, VolumeFamily};

const HALF: Complex64 = Complex64::new(0.5, 0.0);
const MINUS_ONE: Complex64 = Complex64::new(-1.0, 0.0);

pub struct BeltramiSeries<'a, B: DolbeaultComplex> {
    backend: &'a B,
    theta: Vec<B::Form>,
    phi: TruncatedSeries<B::Form>,
    /// `Σ_I`, the bracket convolution feeding each coefficient.
    sigma: TruncatedSeries<B::Form>,
    radius: f64,
}

impl<B: DolbeaultComplex> std::fmt::Debug for BeltramiSeries<'_, B> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BeltramiSeries")
            .field("nvars", &self.phi.nvars())
            .field("degree", &self.phi.max_degree())
            .field("terms", &self.phi.len())
            .field("radius", &self.radius)
            .finish()
    }
}

/// Residual of the Maurer–Cartan equation at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McResidual {
    pub value: f64,
    pub warning: Option<String>,
}

fn euclidean(t: &[Complex64]) -> f64 {
    t.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves the Kuranishi recursion to total degree `max_degree`.
pub fn solve_kuranishi<'a, B: DolbeaultComplex>(
    backend: &'a B,
    theta: Vec<B::Form>,
    max_degree: u32,
) -> Result<BeltramiSeries<'a, B>> {
    if max_degree < 1 {
        return Err(HodgeError::invalid("truncation degree must be at least 1"));
    }
    if theta.is_empty() {
        return Err(HodgeError::invalid("empty θ basis"));
    }
    for (j, th) in theta.iter().enumerate() {
        if backend.degree(th) != 1 {
            return Err(HodgeError::dim(format!("θ_{} is not a degree-1 form", j + 1)));
        }
        let lap = backend.l2_norm(&backend.laplacian(th)?);
        if lap > 1e-12 * backend.l2_norm(th).max(1.0) {
            return Err(HodgeError::NotHarmonic { residual: lap, tol: 1e-12 });
        }
    }
    // linear independence via the Gram matrix of the θ's
    let n = theta.len();
    let mut gram = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = backend.inner(&theta[j], &theta[i])?;
        }
    }
    let ev = crate::linalg::hermitian_eigenvalues(&gram);
    let top = ev.last().copied().unwrap_or(0.0);
    if !(ev[0] > 1e-12 * top.max(f64::MIN_POSITIVE)) {
        return Err(HodgeError::invalid("θ basis is linearly dependent"));
    }

    let mut phi = TruncatedSeries::new(n, max_degree, backend.zero(1));
    let mut sigma = TruncatedSeries::new(n, max_degree, backend.zero(2));
    for (j, th) in theta.iter().enumerate() {
        phi.insert(MultiIndex::unit(n, j), th.clone())?;
    }
    for mu in 2..=max_degree {
        let indices = MultiIndex::all_of_degree(n, mu);
        let solved: Vec<(MultiIndex, B::Form, B::Form)> = indices
            .into_par_iter()
            .map(|idx| {
                let mut s = backend.zero(2);
                for j in idx.divisors() {
                    if j.is_zero() || j == idx {
                        continue;
                    }
                    let k = idx.checked_sub(&j).expect("divisor");
                    if let (Some(a), Some(b)) = (phi.get(&j), phi.get(&k)) {
                        s.axpy(Complex64::new(1.0, 0.0), &backend.bracket(a, b)?);
                    }
                }
                let c = backend.dbar_star(&backend.green(&s)?)?.scaled(HALF);
                Ok((idx, c, s))
            })
            .collect::<Result<_>>()?;
        for (idx, c, s) in solved {
            phi.insert(idx.clone(), c)?;
            sigma.insert(idx, s)?;
        }
    }
    Ok(BeltramiSeries { backend, theta, phi, sigma, radius: f64::INFINITY })
}

impl<'a, B: DolbeaultComplex> BeltramiSeries<'a, B> {
    pub fn backend(&self) -> &'a B {
        self.backend
    }

    pub fn theta(&self) -> &[B::Form] {
        &self.theta
    }

    pub fn series(&self) -> &TruncatedSeries<B::Form> {
        &self.phi
    }

    /// The bracket convolutions `Σ_I`.
    pub fn brackets(&self) -> &TruncatedSeries<B::Form> {
        &self.sigma
    }

    pub fn nvars(&self) -> usize {
        self.phi.nvars()
    }

    pub fn max_degree(&self) -> u32 {
        self.phi.max_degree()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    /// `x₁ = (Σ ‖θ_j‖²)^{1/2}`, so `‖φ₁(t)‖ ≤ x₁|t|`.
    pub fn linear_bound(&self) -> f64 {
        self.theta.iter().map(|t| self.backend.norm(t).powi(2)).sum::<f64>().sqrt()
    }

    /// Sets the radius to the majorant threshold `1/(4 C x₁)`.
    pub fn with_operator_constant(self, c: f64) -> Self {
        let x1 = self.linear_bound();
        let r = if c > 0.0 && x1 > 0.0 { 1.0 / (4.0 * c * x1) } else { f64::INFINITY };
        self.with_radius(r)
    }

    pub fn eval(&self, t: &[Complex64]) -> Result<B::Form> {
        self.phi.eval(t)
    }

    /// `φ₁(t) = Σ θ_j t_j`.
    pub fn linear_part(&self, t: &[Complex64]) -> Result<B::Form> {
        self.phi.eval_degrees(t, 1, 1)
    }

    /// `‖∂̄φ(t) − ½[φ(t),φ(t)]‖` in the backend norm.
    pub fn mc_residual(&self, t: &[Complex64]) -> Result<McResidual> {
        let phi = self.eval(t)?;
        let mut r = self.backend.dbar(&phi)?;
        r.axpy(-HALF, &self.backend.bracket(&phi, &phi)?);
        let tn = euclidean(t);
        let warning = (tn > self.radius)
            .then(|| format!("|t| = {tn:.3e} lies outside the convergence radius {:.3e}", self.radius));
        Ok(McResidual { value: self.backend.norm(&r), warning })
    }

    /// Coefficients `H Σ_I` of `H[φ(t), φ(t)]`.
    pub fn obstruction_series(&self) -> Result<TruncatedSeries<B::Form>> {
        self.sigma.map(self.backend.zero(2), |s| self.backend.harmonic_project(s))
    }

    /// `max_I ‖∂̄φ_I − ½(Σ_I − HΣ_I)‖`: the order-by-order Maurer–Cartan
    /// identity modulo obstructions.
    pub fn recursion_defect(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (idx, c) in self.phi.iter() {
            if idx.degree() < 2 {
                continue;
            }
            let s = self.sigma.coefficient(idx);
            let mut r = self.backend.dbar(c)?;
            r.axpy(-HALF, &s);
            r.axpy(HALF, &self.backend.harmonic_project(&s)?);
            worst = worst.max(self.backend.l2_norm(&r));
        }
        // coefficients dropped as zero still satisfy ∂̄0 = ½(Σ − HΣ)
        for (idx, s) in self.sigma.iter() {
            if self.phi.get(idx).is_none() {
                let mut r = s.clone();
                r.axpy(MINUS_ONE, &self.backend.harmonic_project(s)?);
                worst = worst.max(0.5 * self.backend.l2_norm(&r));
            }
        }
        Ok(worst)
    }

    /// Backend norms of the homogeneous parts `φ_μ(t)` at `t`.
    pub fn homogeneous_norms(&self, t: &[Complex64]) -> Result<Vec<f64>> {
        (1..=self.max_degree())
            .map(|mu| Ok(self.backend.norm(&self.phi.eval_degrees(t, mu, mu)?)))
            .collect()
    }
}
