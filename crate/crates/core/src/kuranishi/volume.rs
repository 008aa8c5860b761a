use num_complex::Complex64;

use super::BeltramiSeries;
use crate::dolbeault::{DolbeaultComplex, TorusBackend};
use crate::error::{HodgeError, Result};
use crate::series::{Linear, TruncatedSeries};

/// `Ω₀(t) = Σ_k (1/k!) (φ(t)⌟)^k Ω₀` as a series in `t`.
pub struct VolumeFamily<'a, B: DolbeaultComplex> {
    backend: &'a B,
    base: B::Scalar,
    series: TruncatedSeries<B::Scalar>,
}

impl<B: DolbeaultComplex> std::fmt::Debug for VolumeFamily<'_, B> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VolumeFamily").field("terms", &self.series.len()).finish()
    }
}

pub fn volume_family<'a, B: DolbeaultComplex>(
    phi: &BeltramiSeries<'a, B>,
    base: B::Scalar,
) -> Result<VolumeFamily<'a, B>> {
    let b = phi.backend();
    let norm = b.scalar_l2(&base)?;
    if (norm - 1.0).abs() > 1e-10 {
        return Err(HodgeError::invalid(format!("Ω₀ must have unit L² norm, got {norm}")));
    }
    let m = phi.max_degree();
    let n = phi.nvars();
    let zero = base.zero_like();
    let mut power = TruncatedSeries::constant(n, m, base.clone());
    let mut total = power.clone();
    let mut factorial = 1.0;
    for k in 1..=b.contraction_depth() {
        power = phi.series().convolve(&power, m, zero.clone(), |a, w| b.contract(a, w))?;
        if power.is_empty() {
            break;
        }
        factorial *= k as f64;
        total.axpy_series(Complex64::new(1.0 / factorial, 0.0), &power)?;
    }
    Ok(VolumeFamily { backend: b, base, series: total })
}

impl<B: DolbeaultComplex> VolumeFamily<'_, B> {
    pub fn base(&self) -> &B::Scalar {
        &self.base
    }

    pub fn series(&self) -> &TruncatedSeries<B::Scalar> {
        &self.series
    }

    pub fn eval(&self, t: &[Complex64]) -> Result<B::Scalar> {
        self.series.eval(t)
    }

    /// `‖Ω₀(t) − Ω₀‖_{L²}`.
    pub fn distance(&self, t: &[Complex64]) -> Result<f64> {
        let mut d = self.eval(t)?;
        d.axpy(Complex64::new(-1.0, 0.0), &self.base);
        self.backend.scalar_l2(&d)
    }
}

pub fn wp_distance<B: DolbeaultComplex>(family: &VolumeFamily<'_, B>, t: &[Complex64]) -> Result<f64> {
    family.distance(t)
}

/// `‖dΩ₀(t)‖_{L²}` on the torus, summed over all bidegree parts.
pub fn closedness_defect(
    torus: &TorusBackend,
    family: &VolumeFamily<'_, TorusBackend>,
    t: &[Complex64],
) -> Result<f64> {
    let omega = family.eval(t)?;
    let mut sq = 0.0;
    for part in omega.parts() {
        let (del, dbar) = torus.exterior_derivative(part)?;
        sq += torus.l2_inner(&del, &del)?.re + torus.l2_inner(&dbar, &dbar)?.re;
    }
    Ok(sq.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dolbeault::{FormKind, TorusForm};
    use crate::kuranishi::solve_kuranishi;
    use crate::linalg::c64;

    fn phi_c(c: Complex64) -> TorusForm {
        // c·∂₁⊗dz̄₁ on a 2-torus: dz̄₁ is bit 2
        TorusForm::constant(2, FormKind::Vector { q: 1 }, &[(0, 0b0100, c)]).unwrap()
    }

    #[test]
    fn linear_correction_family() {
        let b = TorusBackend::new(2, 1, c64(0.0, 1.0), 1.0).unwrap();
        let c = c64(0.6, -0.8);
        let phi = solve_kuranishi(&b, vec![phi_c(c)], 3).unwrap();
        let fam = volume_family(&phi, b.volume_form()).unwrap();
        let t = [c64(0.3, 0.1)];
        let w = fam.eval(&t).unwrap();
        assert_eq!(w.part(2, 0).unwrap().coefficient(&[0; 4], 0, 0b0011), c64(1.0, 0.0));
        // c·t·dz̄₁∧dz₂ = −c·t·dz₂∧dz̄₁
        let got = w.part(1, 1).unwrap().coefficient(&[0; 4], 0, 0b0110);
        assert!((got + c * t[0]).norm() < 1e-15);
        assert!(w.part(0, 2).is_none_or(|p| p.is_zero()));
        assert_eq!(fam.eval(&[c64(0.0, 0.0)]).unwrap(), b.volume_form());

        let dist = wp_distance(&fam, &t).unwrap();
        assert!((dist - (c * t[0]).norm()).abs() < 1e-14);
        let mut last = 0.0;
        for s in 1..10 {
            let d = wp_distance(&fam, &[c64(0.05 * s as f64, 0.0)]).unwrap();
            assert!((d - 0.05 * s as f64).abs() < 1e-14 && d >= last);
            last = d;
        }
        assert!(closedness_defect(&b, &fam, &t).unwrap() < 1e-9);
    }

    #[test]
    fn requires_normalized_base() {
        let b = TorusBackend::new(2, 1, c64(0.0, 1.0), 1.0).unwrap();
        let phi = solve_kuranishi(&b, b.harmonic_basis(1), 2).unwrap();
        let doubled = b.volume_form().scaled(c64(2.0, 0.0));
        assert!(volume_family(&phi, doubled).is_err());
    }
}
