use hodgekit::dolbeault::{harmonic_norm_ratio, operator_norm_probe, validate, DglaBackend, DolbeaultComplex};
use hodgekit::kuranishi::{majorant, solve_kuranishi, verify_estimates, volume_family};
use hodgekit::linalg::{c64, CMatrix};
use hodgekit::series::MultiIndex;
use hodgekit::Complex64;

fn z(r: usize, c: usize) -> CMatrix {
    CMatrix::zeros(r, c)
}

/// Harmonic e1, e3; D e2 = f1; every bracket lands on the exact f1, so the
/// obstruction vanishes but the series never terminates.
fn unobstructed() -> DglaBackend {
    let mut d1 = z(2, 3);
    d1[(0, 1)] = c64(1.0, 0.0);
    let mut b0 = z(3, 3);
    b0[(0, 0)] = c64(1.0, 0.0);
    b0[(0, 1)] = c64(1.0, 0.0);
    b0[(1, 0)] = c64(1.0, 0.0);
    b0[(1, 1)] = c64(1.0, 0.0);
    b0[(2, 2)] = c64(0.5, 0.0);
    b0[(0, 2)] = c64(0.5, 0.0);
    b0[(2, 0)] = c64(0.5, 0.0);
    let gram = vec![CMatrix::identity(1, 1), CMatrix::identity(3, 3), CMatrix::identity(2, 2), CMatrix::identity(0, 0)];
    let mut c = z(3, 3);
    c[(0, 2)] = c64(1.0, 0.0);
    c[(2, 0)] = c64(1.0, 0.0);
    DglaBackend::from_parts([z(3, 1), d1, z(0, 2)], gram, vec![b0, z(3, 3)], vec![c]).unwrap()
}

#[test]
fn single_direction_coefficients_by_hand() {
    let b = unobstructed();
    let e1 = b.basis_vector(1, 0);
    let phi = solve_kuranishi(&b, vec![e1], 5).unwrap();
    // φ₂ = ½e2, φ₃ = ½e2, φ₄ = (1 + ¼)/2 e2, φ₅ = (2·5/8 + 2·¼)/2 e2
    for (mu, want) in [(2, 0.5), (3, 0.5), (4, 0.625), (5, 0.875)] {
        let c = phi.series().coefficient(&MultiIndex::new(vec![mu]));
        assert!((c.v[1] - c64(want, 0.0)).norm() < 1e-14, "degree {mu}: {}", c.v[1]);
        assert_eq!((c.v[0], c.v[2]), (c64(0.0, 0.0), c64(0.0, 0.0)));
    }
    assert!(phi.obstruction_series().unwrap().iter().all(|(_, v)| v.v.norm() < 1e-14));
}

#[test]
fn residual_scales_with_truncation_order() {
    let b = unobstructed();
    let phi = solve_kuranishi(&b, b.harmonic_basis(1), 4).unwrap();
    let dir = [c64(0.6, 0.0), c64(0.8, 0.0)];
    let at = |s: f64| -> Vec<Complex64> { dir.iter().map(|d| d * s).collect() };
    let r1 = phi.mc_residual(&at(0.1)).unwrap().value;
    let r2 = phi.mc_residual(&at(0.05)).unwrap().value;
    let ratio = r1 / r2;
    assert!((ratio / 32.0 - 1.0).abs() <= 0.2, "ratio {ratio}");
    assert!(r1 > 0.0);
    assert_eq!(phi.mc_residual(&at(0.0)).unwrap().value, 0.0);
    assert!(phi.recursion_defect().unwrap() < 1e-10);
}

#[test]
fn majorant_dominates_coefficients() {
    let b = unobstructed();
    let phi = solve_kuranishi(&b, b.harmonic_basis(1), 6).unwrap();
    let c = operator_norm_probe(&b, 400, 11).unwrap().constant;
    let x = majorant(c, phi.linear_bound(), 6).unwrap();
    let dirs = [[c64(1.0, 0.0), c64(0.0, 0.0)], [c64(0.6, 0.0), c64(0.0, 0.8)], [c64(0.0, 0.5), c64(0.5f64.sqrt(), 0.5)]];
    for t in dirs {
        let norms = phi.homogeneous_norms(&t).unwrap();
        for (mu, n) in norms.iter().enumerate() {
            assert!(*n <= x.coefficient(mu + 1) * (1.0 + 1e-12), "degree {}: {n} > {}", mu + 1, x.coefficient(mu + 1));
        }
    }
}

#[test]
fn estimates_hold_inside_the_radius() {
    let b = unobstructed();
    assert!(validate(&b, 100, 3, 1e-10).unwrap().passed());
    let c = operator_norm_probe(&b, 200, 5).unwrap().constant;
    let phi = solve_kuranishi(&b, b.harmonic_basis(1), 5).unwrap().with_operator_constant(c);
    let fam = volume_family(&phi, b.volume_form()).unwrap();
    let c1 = harmonic_norm_ratio(&b).unwrap();
    let r = phi.radius();
    assert!(r.is_finite() && r > 0.0);
    let samples: Vec<Vec<Complex64>> = (1..=10)
        .map(|k| {
            let s = r * k as f64 / 10.0;
            let a = 0.3 * k as f64;
            vec![c64(s * a.cos(), 0.0), c64(0.0, s * a.sin())]
        })
        .collect();
    let rep = verify_estimates(&phi, &fam, &samples, c1, 1e-12).unwrap();
    assert_eq!(rep.samples.len(), 10);
    assert!(rep.passed, "{rep:?}");
    assert!(rep.samples.iter().all(|s| s.phi_margin > 0.0 && s.wp_margin > 0.0));
}

