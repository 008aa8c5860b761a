//! Norm comparisons between `φ(t)`, its linear part, the contracted volume
//! form and the Weil–Petersson-type distance `‖Ω₀(t) − Ω₀‖`.
//!
//! Each inequality carries a margin (positive when it holds). The thresholds
//! reported are empirical: the largest sampled `|t|` below which every sample
//! satisfies the inequality.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{euclidean, BeltramiSeries, VolumeFamily};
use crate::dolbeault::DolbeaultComplex;
use crate::error::{HodgeError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSample {
    pub t_norm: f64,
    /// `‖φ₁(t)‖` and `‖φ(t)‖` in the backend (sup) norm.
    pub phi1_norm: f64,
    pub phi_norm: f64,
    pub phi1_w0: f64,
    /// `‖φ(t)⌟Ω₀‖_{L²}`.
    pub contraction_l2: f64,
    /// `‖Ω₀(t) − Ω₀‖_{L²}`.
    pub wp_distance: f64,
    pub phi_margin: f64,
    pub contraction_margin: f64,
    pub wp_margin: f64,
    pub phi_ok: bool,
    pub contraction_ok: bool,
    pub wp_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub radius: f64,
    /// `C(1)`, instantiated as the harmonic `C¹/W⁰` norm ratio.
    pub c_one: f64,
    pub samples: Vec<EstimateSample>,
    pub skipped: Vec<String>,
    pub eps1: f64,
    pub eps2: f64,
    pub eps: f64,
    pub passed: bool,
}

/// `min(value − lo, hi − value)`.
fn sandwich(value: f64, reference: f64) -> f64 {
    (value - 0.5 * reference).min(1.5 * reference - value)
}

/// Checks, at each in-radius sample,
///
/// * `½‖φ₁(t)‖ ≤ ‖φ(t)‖ ≤ (3/2)‖φ₁(t)‖`,
/// * `½‖φ₁(t)‖_{W⁰} ≤ ‖φ(t)⌟Ω₀‖_{L²} ≤ (3/2)‖φ₁(t)‖_{W⁰}`,
/// * `‖Ω₀(t) − Ω₀‖_{L²} ≥ ‖φ(t)‖_{C⁰} / (6 C(1))`.
///
/// `tol` absorbs rounding in the degenerate `t = 0` case.
pub fn verify_estimates<B: DolbeaultComplex>(
    phi: &BeltramiSeries<'_, B>,
    family: &VolumeFamily<'_, B>,
    samples: &[Vec<Complex64>],
    c_one: f64,
    tol: f64,
) -> Result<EstimateReport> {
    if !(c_one > 0.0) {
        return Err(HodgeError::invalid("C(1) must be positive"));
    }
    let b = phi.backend();
    let radius = phi.radius();
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (k, t) in samples.iter().enumerate() {
        let tn = euclidean(t);
        if tn > radius {
            skipped.push(format!("sample {k}: |t| = {tn:.4e} exceeds radius {radius:.4e}"));
            continue;
        }
        let p1 = phi.linear_part(t)?;
        let p = phi.eval(t)?;
        let (phi1_norm, phi_norm, phi1_w0) = (b.norm(&p1), b.norm(&p), b.l2_norm(&p1));
        let contraction_l2 = b.scalar_l2(&b.contract(&p, family.base())?)?;
        let wp = family.distance(t)?;
        let phi_margin = sandwich(phi_norm, phi1_norm);
        let contraction_margin = sandwich(contraction_l2, phi1_w0);
        let wp_margin = wp - b.norms(&p).c0 / (6.0 * c_one);
        out.push(EstimateSample {
            t_norm: tn,
            phi1_norm,
            phi_norm,
            phi1_w0,
            contraction_l2,
            wp_distance: wp,
            phi_margin,
            contraction_margin,
            wp_margin,
            phi_ok: phi_margin >= -tol,
            contraction_ok: contraction_margin >= -tol,
            wp_ok: wp_margin >= -tol,
        });
    }
    let threshold = |ok: fn(&EstimateSample) -> bool| {
        let mut sorted: Vec<&EstimateSample> = out.iter().collect();
        sorted.sort_by(|a, b| a.t_norm.total_cmp(&b.t_norm));
        let mut best = 0.0;
        for s in sorted {
            if !ok(s) {
                break;
            }
            best = s.t_norm;
        }
        best
    };
    let eps1 = threshold(|s| s.phi_ok);
    let eps2 = threshold(|s| s.contraction_ok);
    let eps = threshold(|s| s.wp_ok);
    let passed = out.iter().all(|s| s.phi_ok && s.contraction_ok && s.wp_ok);
    Ok(EstimateReport { radius, c_one, samples: out, skipped, eps1, eps2, eps, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dolbeault::{harmonic_norm_ratio, TorusBackend};
    use crate::kuranishi::{solve_kuranishi, volume_family};
    use crate::linalg::c64;

    #[test]
    fn constant_theta_sandwich_is_tight() {
        let b = TorusBackend::new(2, 1, c64(0.0, 1.0), 1.0).unwrap();
        let phi = solve_kuranishi(&b, b.harmonic_basis(1), 3).unwrap();
        let fam = volume_family(&phi, b.volume_form()).unwrap();
        let c1 = harmonic_norm_ratio(&b).unwrap();
        let mut samples: Vec<Vec<Complex64>> = (1..5)
            .map(|k| (0..4).map(|j| c64(0.02 * (k + j) as f64, 0.01 * k as f64)).collect())
            .collect();
        samples.push(vec![c64(0.0, 0.0); 4]);
        let rep = verify_estimates(&phi, &fam, &samples, c1, 1e-12).unwrap();
        assert!(rep.passed, "{rep:?}");
        for s in &rep.samples {
            assert!((s.phi_norm - s.phi1_norm).abs() < 1e-15);
        }
        // t = 0 holds degenerately
        let zero = rep.samples.iter().find(|s| s.t_norm == 0.0).unwrap();
        assert_eq!((zero.phi_norm, zero.wp_distance), (0.0, 0.0));
    }

    #[test]
    fn out_of_radius_samples_are_skipped() {
        let b = TorusBackend::new(2, 1, c64(0.0, 1.0), 1.0).unwrap();
        let phi = solve_kuranishi(&b, b.harmonic_basis(1), 2).unwrap().with_radius(0.1);
        let fam = volume_family(&phi, b.volume_form()).unwrap();
        let rep = verify_estimates(&phi, &fam, &[vec![c64(1.0, 0.0); 4]], 1.0, 1e-12).unwrap();
        assert_eq!(rep.samples.len(), 0);
        assert_eq!(rep.skipped.len(), 1);
    }
}
