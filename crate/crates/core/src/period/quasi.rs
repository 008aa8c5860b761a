use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;

use super::frame::TorusFrame;
use crate::blocks::BlockUpperUnipotent;
use crate::dolbeault::{DolbeaultComplex, FormKind, TorusBackend, TorusForm};
use crate::error::{HodgeError, Result};
use crate::linalg::CMatrix;
use crate::series::Linear;

pub const NEUMANN_TOL: f64 = 1e-12;
pub const NEUMANN_STEPS: usize = 200;

/// `T = ∂̄* G ∂`, mapping scalar `(p,q)`-forms to `(p+1,q−1)`-forms; `q ≥ 1`.
pub fn t_operator(backend: &TorusBackend, omega: &TorusForm) -> Result<TorusForm> {
    if !matches!(omega.kind(), FormKind::Scalar { q: 1.., .. }) {
        return Err(HodgeError::dim(format!("T needs a scalar (p,q)-form with q ≥ 1, got {:?}", omega.kind())));
    }
    backend.dbar_star_form(&backend.green_form(&backend.del(omega)?)?)
}

/// `ρ = (I + T∘i_φ)^{-1} η` by Neumann iteration. Iterates are kept in the
/// Galerkin space `‖μ‖∞ ≤ k`, so products never leave the dealiased band.
fn neumann(b: &TorusBackend, phi: &TorusForm, eta: &TorusForm, k: usize) -> Result<TorusForm> {
    let mut rho = eta.resized(k);
    let mut update = f64::INFINITY;
    for step in 0..NEUMANN_STEPS {
        let t = t_operator(b, &b.contract_form(phi, &rho)?)?.resized(k);
        let mut next = eta.resized(k);
        next.axpy(Complex64::new(-1.0, 0.0), &t);
        let mut diff = next.clone();
        diff.axpy(Complex64::new(-1.0, 0.0), &rho);
        update = b.l2_inner(&diff, &diff)?.re.sqrt();
        rho = next;
        if update < NEUMANN_TOL {
            debug!("Neumann iteration converged after {} steps", step + 1);
            return Ok(rho);
        }
    }
    Err(HodgeError::NoConvergence { steps: NEUMANN_STEPS, update })
}

fn components(b: &TorusBackend, f: &TorusForm, basis: &[TorusForm]) -> Result<Vec<Complex64>> {
    let h = b.harmonic_form(f)?;
    basis.iter().map(|e| b.l2_inner(&h, e)).collect()
}

fn rows_to_matrix(rows: Vec<Vec<Complex64>>, ncols: usize) -> CMatrix {
    CMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Weight-2 quasi-period blocks `(Φ^{0,1}, Φ^{0,2}, Φ^{1,2})` of a Beltrami
/// differential against a torus frame. Requires `‖φ‖ < 1` in the sup
/// operator norm.
pub fn quasi_period(phi: &TorusForm, frame: &TorusFrame<'_>) -> Result<BlockUpperUnipotent> {
    let b = frame.backend();
    if phi.kind() != (FormKind::Vector { q: 1 }) || phi.dimension() != b.dimension() {
        return Err(HodgeError::dim("quasi-period map takes a (0,1) vector form"));
    }
    let norm = b.norms(phi).sup_op;
    if norm >= 1.0 {
        return Err(HodgeError::BoundViolated(format!("‖φ‖ = {norm} must be < 1")));
    }
    let (h20, h11, _) = frame.hodge();
    let k = b.cutoff().max(phi.cutoff());

    let top: Vec<(Vec<Complex64>, Vec<Complex64>)> = frame
        .eta(0)
        .par_iter()
        .map(|eta| {
            let rho = neumann(b, phi, eta, k)?;
            let once = b.contract_form(phi, &rho)?;
            let twice = b.contract_form(phi, &once)?.scaled(Complex64::new(0.5, 0.0));
            Ok((components(b, &once, frame.eta(1))?, components(b, &twice, frame.eta(2))?))
        })
        .collect::<Result<_>>()?;
    let middle: Vec<Vec<Complex64>> = frame
        .eta(1)
        .par_iter()
        .map(|eta| {
            let rho = neumann(b, phi, eta, k)?;
            components(b, &b.contract_form(phi, &rho)?, frame.eta(2))
        })
        .collect::<Result<_>>()?;

    let (r01, r02): (Vec<_>, Vec<_>) = top.into_iter().unzip();
    BlockUpperUnipotent::new(rows_to_matrix(r01, h11), rows_to_matrix(r02, h20), rows_to_matrix(middle, h20))
}

/// Max-abs block difference between `φ` and its translate by `shift`; the
/// two are gauge-equivalent, so the blocks must agree.
pub fn gauge_defect(phi: &TorusForm, frame: &TorusFrame<'_>, shift: &[f64]) -> Result<f64> {
    let moved = frame.backend().translate(phi, shift)?;
    let (a, b) = (quasi_period(phi, frame)?, quasi_period(&moved, frame)?);
    Ok(a.max_abs_difference(&b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, max_abs};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn torus(k: usize) -> TorusBackend {
        TorusBackend::new(2, k, c64(0.2, 0.9), 1.0).unwrap()
    }

    #[test]
    fn t_kills_harmonic_and_contracts() {
        let b = torus(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for h in b.constant_basis(FormKind::Scalar { p: 1, q: 1 }) {
            assert!(t_operator(&b, &h).unwrap().is_zero());
        }
        for (p, q) in [(1, 1), (0, 2), (0, 1), (1, 2)] {
            let w = b.random_kind(FormKind::Scalar { p, q }, &mut rng);
            let tw = t_operator(&b, &w).unwrap();
            let n = |f: &TorusForm| b.l2_inner(f, f).unwrap().re.sqrt();
            assert!(n(&tw) <= n(&w) * (1.0 + 1e-9), "({p},{q})");
        }
        let w = b.random_kind(FormKind::Scalar { p: 2, q: 0 }, &mut rng);
        assert!(t_operator(&b, &w).is_err());
    }

    #[test]
    fn zero_phi_is_identity_point() {
        let b = torus(1);
        let frame = TorusFrame::new(&b);
        let zero = TorusForm::zero(2, FormKind::Vector { q: 1 }, 1);
        let blocks = quasi_period(&zero, &frame).unwrap();
        assert_eq!(blocks, BlockUpperUnipotent::identity(1, 4));
    }

    #[test]
    fn constant_phi_single_entry() {
        let b = torus(1);
        let frame = TorusFrame::new(&b);
        let c = c64(0.3, -0.4);
        let phi = TorusForm::constant(2, FormKind::Vector { q: 1 }, &[(0, 0b0100, c)]).unwrap();
        let blocks = quasi_period(&phi, &frame).unwrap();
        // φ⌟(dz1∧dz2) = c dz̄1∧dz2 = −c dz2∧dz̄1; (1,1) masks sorted: 0101, 0110, 1001, 1010
        let nz: Vec<_> = blocks.b01.iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nz.len(), 1);
        assert_eq!(blocks.b01[(0, 1)], -c);
        assert_eq!(max_abs(&blocks.b02), 0.0);
    }

    #[test]
    fn nonconstant_phi_obeys_block_bounds_and_gauge() {
        let b = torus(1);
        let frame = TorusFrame::new(&b);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for r in [0.1, 0.3, 0.5] {
            let mut phi = b.random_form(1, &mut rng);
            let n = b.norms(&phi).sup_op;
            phi = phi.scaled(c64(r / n, 0.0));
            let blocks = quasi_period(&phi, &frame).unwrap();
            assert!(max_abs(&blocks.b01) <= r / (1.0 - r));
            assert!(max_abs(&blocks.b12) <= r / (1.0 - r));
            assert!(max_abs(&blocks.b02) <= r * r / (1.0 - r));
            assert!(gauge_defect(&phi, &frame, &[0.13, 0.4, 0.77, 0.05]).unwrap() < 1e-12);
        }
    }

    #[test]
    fn rejects_large_phi() {
        let b = torus(0);
        let frame = TorusFrame::new(&b);
        let phi = TorusForm::constant(2, FormKind::Vector { q: 1 }, &[(0, 0b0100, c64(1.5, 0.0))]).unwrap();
        assert!(matches!(quasi_period(&phi, &frame), Err(HodgeError::BoundViolated(_))));
    }
}
