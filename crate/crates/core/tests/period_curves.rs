use hodgekit::dolbeault::{DolbeaultComplex, FormKind, TorusBackend};
use hodgekit::kuranishi::solve_kuranishi;
use hodgekit::linalg::{c64, max_abs};
use hodgekit::period::{purity_determinant, quasi_period, transversality_check, TorusFrame};
use hodgekit::{Complex64, Linear};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn block_bounds_on_random_beltrami_forms() {
    let b = TorusBackend::new(2, 1, c64(0.3, 1.1), 1.0).unwrap();
    let frame = TorusFrame::new(&b);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = Vec::new();
    for k in 0..100 {
        let phi = b.random_kind(FormKind::Vector { q: 1 }, &mut rng);
        let target: f64 = rng.random_range(0.01..=0.5);
        let phi = phi.scaled(c64(target / b.norm(&phi), 0.0));
        let n = b.norm(&phi);
        let blocks = quasi_period(&phi, &frame).unwrap();
        let (m01, m02, m12) = blocks.magnitudes();
        let lin = n / (1.0 - n);
        if m01 > lin || m12 > lin || m02 > n * n / (1.0 - n) {
            violations.push((k, n, m01, m02, m12));
        }
    }
    assert!(violations.is_empty(), "{violations:?}");
}

#[test]
fn kuranishi_curve_is_transversal() {
    let b = TorusBackend::new(2, 1, c64(0.0, 1.0), 1.0).unwrap();
    let frame = TorusFrame::new(&b);
    let phi = solve_kuranishi(&b, b.harmonic_basis(1), 3).unwrap();
    let curve = |t: &[Complex64]| quasi_period(&phi.eval(t)?, &frame);
    for t in [
        vec![c64(0.05, 0.0), c64(0.02, -0.01), c64(-0.03, 0.0), c64(0.0, 0.04)],
        vec![c64(0.1, 0.1), c64(0.0, 0.0), c64(0.0, 0.0), c64(-0.1, 0.05)],
    ] {
        let rep = transversality_check(curve, &t, 1e-4).unwrap();
        assert!(rep.max <= 1e-8, "{rep:?}");
        let blocks = curve(&t).unwrap();
        assert!(max_abs(&blocks.b01) > 1e-3);
        assert!(purity_determinant(&blocks).norm() > 0.5);
    }
}

#[test]
fn translation_leaves_blocks_fixed() {
    let b = TorusBackend::new(2, 1, c64(0.0, 1.0), 1.0).unwrap();
    let frame = TorusFrame::new(&b);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let phi = b.random_kind(FormKind::Vector { q: 1 }, &mut rng);
    let phi = phi.scaled(c64(0.3 / b.norm(&phi), 0.0));
    let shift = [0.17, 0.41, 0.0, 0.73];
    let shifted = b.translate(&phi, &shift).unwrap();
    let p = quasi_period(&phi, &frame).unwrap();
    let q = quasi_period(&shifted, &frame).unwrap();
    assert!(p.max_abs_difference(&q) < 1e-12);
}
