//! The `∂̄` complex of a compact complex manifold with values in the
//! holomorphic tangent bundle, behind a single backend contract.
//!
//! Two backends are provided:
//!
//! * [`TorusBackend`]: a flat complex torus `(ℂ/Λ)^d` with truncated Fourier
//!   modes. Operators act mode-wise on symbols; products (bracket, contraction)
//!   are computed pseudo-spectrally on a zero-padded grid.
//! * [`DglaBackend`]: an abstract finite-dimensional graded complex loaded from
//!   JSON, which is the only way to exercise nonzero obstruction brackets.
//!
//! Sign conventions (fixed here, checked by the Leibniz test):
//!
//! * vector-valued forms are `φ = Σ φ^i ∂_i ⊗ dz̄_J`, `∂̄` acts component-wise;
//! * `[φ, ψ]^k = Σ_i φ^i ∧ ∂_i ψ^k − (−1)^{pq} ψ^i ∧ ∂_i φ^k` for degrees
//!   `p, q`, so `∂̄[φ,ψ] = [∂̄φ,ψ] + (−1)^p [φ,∂̄ψ]`;
//! * contraction is `i_φ ω = Σ_i φ^i ∧ ι_{∂_i} ω`.

mod dgla;
pub mod exterior;
pub mod fft;
mod torus;

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{HodgeError, Result};
use crate::series::Linear;

pub use dgla::{DglaBackend, DglaData, DglaForm, DglaScalar};
pub use torus::{FormKind, ScalarForm, TorusBackend, TorusConfig, TorusForm};

/// Grid norms of a form.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NormReport {
    pub c0: f64,
    pub sup_op: f64,
    pub w0: f64,
    pub c1: f64,
}

pub trait DolbeaultComplex: Sync {
    /// Vector-valued `(0,q)`-forms.
    type Form: Linear + std::fmt::Debug + Send + Sync;
    /// Scalar forms of mixed type (the holomorphic volume form and its
    /// contractions).
    type Scalar: Linear + std::fmt::Debug + Send + Sync;

    fn complex_dimension(&self) -> usize;
    fn zero(&self, degree: usize) -> Self::Form;
    fn degree(&self, f: &Self::Form) -> usize;

    fn dbar(&self, f: &Self::Form) -> Result<Self::Form>;
    fn dbar_star(&self, f: &Self::Form) -> Result<Self::Form>;
    fn laplacian(&self, f: &Self::Form) -> Result<Self::Form>;
    fn green(&self, f: &Self::Form) -> Result<Self::Form>;
    fn harmonic_project(&self, f: &Self::Form) -> Result<Self::Form>;
    fn bracket(&self, a: &Self::Form, b: &Self::Form) -> Result<Self::Form>;
    /// L² inner product, linear in the first slot.
    fn inner(&self, a: &Self::Form, b: &Self::Form) -> Result<Complex64>;
    fn norms(&self, f: &Self::Form) -> NormReport;

    /// The norm used by the estimate suites (sup of coefficients).
    fn norm(&self, f: &Self::Form) -> f64 {
        self.norms(f).c0
    }

    fn l2_norm(&self, f: &Self::Form) -> f64 {
        self.norms(f).w0
    }

    /// L²-orthonormal basis of harmonic forms of the given degree.
    fn harmonic_basis(&self, degree: usize) -> Vec<Self::Form>;
    fn random_form(&self, degree: usize, rng: &mut ChaCha8Rng) -> Self::Form;

    /// Normalized holomorphic volume form `Ω₀`.
    fn volume_form(&self) -> Self::Scalar;
    fn contract(&self, phi: &Self::Form, omega: &Self::Scalar) -> Result<Self::Scalar>;
    fn scalar_inner(&self, a: &Self::Scalar, b: &Self::Scalar) -> Result<Complex64>;
    /// Number of contractions after which `φ⌟…⌟Ω₀` vanishes identically.
    fn contraction_depth(&self) -> usize;

    fn scalar_l2(&self, a: &Self::Scalar) -> Result<f64> {
        Ok(self.scalar_inner(a, a)?.re.max(0.0).sqrt())
    }
}

fn diff_norm<B: DolbeaultComplex + ?Sized>(b: &B, x: &B::Form, y: &B::Form) -> f64 {
    let mut d = x.clone();
    d.axpy(Complex64::new(-1.0, 0.0), y);
    b.l2_norm(&d)
}

/// `max_h ‖h‖_{C¹}/‖h‖_{W⁰}` over the harmonic `(0,1)` basis.
pub fn harmonic_norm_ratio<B: DolbeaultComplex + ?Sized>(b: &B) -> Result<f64> {
    let basis = b.harmonic_basis(1);
    if basis.is_empty() {
        return Err(HodgeError::invalid("harmonic space of degree 1 is zero"));
    }
    Ok(basis
        .iter()
        .map(|h| {
            let n = b.norms(h);
            n.c1 / n.w0
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    /// Empirical `sup ‖½∂̄*G[φ,ψ]‖ / (‖φ‖‖ψ‖)`.
    pub constant: f64,
    pub samples: usize,
    pub skipped: usize,
}

/// Samples `‖½∂̄*G[φ,ψ]‖/(‖φ‖‖ψ‖)` over random degree-1 pairs and all pairs of
/// harmonic basis forms, in the backend norm.
pub fn operator_norm_probe<B: DolbeaultComplex + ?Sized>(
    b: &B,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if samples == 0 {
        return Err(HodgeError::invalid("probe needs at least one sample"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(B::Form, B::Form)> = Vec::with_capacity(samples);
    for _ in 0..samples {
        let phi = b.random_form(1, &mut rng);
        let psi = b.random_form(1, &mut rng);
        pairs.push((phi, psi));
    }
    let basis = b.harmonic_basis(1);
    for (i, x) in basis.iter().enumerate() {
        for y in &basis[i..] {
            pairs.push((x.clone(), y.clone()));
        }
    }
    let mut constant = 0.0f64;
    let mut skipped = 0;
    for (phi, psi) in &pairs {
        let denom = b.norm(phi) * b.norm(psi);
        if denom <= f64::MIN_POSITIVE {
            skipped += 1;
            continue;
        }
        let v = b
            .dbar_star(&b.green(&b.bracket(phi, psi)?)?)?
            .scaled(Complex64::new(0.5, 0.0));
        constant = constant.max(b.norm(&v) / denom);
    }
    Ok(ProbeReport { constant, samples: pairs.len(), skipped })
}

/// Per-member probe constants along a family of backends; every member uses
/// the same seed so differences reflect the family, not the sampling.
pub fn operator_norm_probe_family<B: DolbeaultComplex>(
    family: &[B],
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    family
        .iter()
        .map(|b| operator_norm_probe(b, samples, seed).map(|r| r.constant))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub dbar_squared: f64,
    pub adjointness: f64,
    pub decomposition: f64,
    pub bracket_symmetry: f64,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `∂̄² = 0`, adjointness of `∂̄*`, `id = H + ΔG` and bracket symmetry on
/// random forms of every degree.
pub fn validate<B: DolbeaultComplex + ?Sized>(
    b: &B,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ValidationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = ValidationReport {
        samples,
        dbar_squared: 0.0,
        adjointness: 0.0,
        decomposition: 0.0,
        bracket_symmetry: 0.0,
        violations: Vec::new(),
    };
    for s in 0..samples {
        let q = s % 3;
        let f = b.random_form(q, &mut rng);
        let g = b.random_form(q + 1, &mut rng);

        let dd = b.dbar(&b.dbar(&f)?)?;
        rep.dbar_squared = rep.dbar_squared.max(b.l2_norm(&dd));

        let lhs = b.inner(&b.dbar(&f)?, &g)?;
        let rhs = b.inner(&f, &b.dbar_star(&g)?)?;
        rep.adjointness = rep.adjointness.max((lhs - rhs).norm());

        let mut recon = b.harmonic_project(&f)?;
        recon.axpy(Complex64::new(1.0, 0.0), &b.laplacian(&b.green(&f)?)?);
        rep.decomposition = rep.decomposition.max(diff_norm(b, &recon, &f));

        if q == 1 {
            let g1 = b.random_form(1, &mut rng);
            let asym = diff_norm(b, &b.bracket(&f, &g1)?, &b.bracket(&g1, &f)?);
            rep.bracket_symmetry = rep.bracket_symmetry.max(asym);
        }
    }
    for (name, v) in [
        ("dbar∘dbar", rep.dbar_squared),
        ("adjointness", rep.adjointness),
        ("H + ΔG", rep.decomposition),
        ("bracket symmetry", rep.bracket_symmetry),
    ] {
        if !(v <= tol) {
            rep.violations.push(format!("{name}: defect {v:.3e} > {tol:.1e}"));
        }
    }
    Ok(rep)
}
