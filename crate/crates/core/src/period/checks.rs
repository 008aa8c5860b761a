use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frame::DeformationFrame;
use crate::blocks::BlockUpperUnipotent;
use crate::error::{HodgeError, Result};
use crate::linalg::{c64, max_abs, CMatrix};

/// `det [[I, Φ01, Φ02], [0, I, Φ12], [conj Φ02, conj Φ01, I]]`; nonzero
/// exactly when the filtration defines a pure Hodge structure.
pub fn purity_determinant(blocks: &BlockUpperUnipotent) -> Complex64 {
    let (h20, h11, _) = blocks.hodge_numbers();
    if h20 == 0 {
        return c64(1.0, 0.0);
    }
    let mut m = blocks.to_dense();
    let conj = |x: &CMatrix| x.map(|z| z.conj());
    m.view_mut((h20 + h11, 0), (h20, h20)).copy_from(&conj(&blocks.b02));
    m.view_mut((h20 + h11, h20), (h20, h11)).copy_from(&conj(&blocks.b01));
    m.lu().determinant()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    /// Max-abs residual per real parameter direction.
    pub per_direction: Vec<f64>,
    pub max: f64,
}

/// Central-difference test of `∂Φ^{0,2} = (∂Φ^{0,1})·Φ^{1,2}` at `t`, one
/// real direction per coordinate.
pub fn transversality_check<F>(curve: F, t: &[Complex64], h: f64) -> Result<TransversalityReport>
where
    F: Fn(&[Complex64]) -> Result<BlockUpperUnipotent>,
{
    if !(h > 0.0) {
        return Err(HodgeError::invalid("finite-difference step must be positive"));
    }
    let at = curve(t)?;
    let mut per_direction = Vec::with_capacity(t.len());
    for j in 0..t.len() {
        let shifted = |s: f64| {
            let mut u = t.to_vec();
            u[j] += s;
            curve(&u)
        };
        let (plus, minus) = (shifted(h)?, shifted(-h)?);
        let inv = c64(0.5 / h, 0.0);
        let d01 = (&plus.b01 - &minus.b01) * inv;
        let d02 = (&plus.b02 - &minus.b02) * inv;
        per_direction.push(max_abs(&(d02 - d01 * &at.b12)));
    }
    let max = per_direction.iter().copied().fold(0.0, f64::max);
    Ok(TransversalityReport { per_direction, max })
}

/// One-variable polynomial block curve: every entry is `Σ_k c_k t^k`, with
/// coefficients stored as `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyBlockCurve {
    pub b01: Vec<Vec<Vec<[f64; 2]>>>,
    pub b02: Vec<Vec<Vec<[f64; 2]>>>,
    pub b12: Vec<Vec<Vec<[f64; 2]>>>,
}

impl PolyBlockCurve {
    fn entry(poly: &[[f64; 2]], t: Complex64) -> Complex64 {
        poly.iter().rev().fold(c64(0.0, 0.0), |acc, &[re, im]| acc * t + c64(re, im))
    }

    fn block(rows: &[Vec<Vec<[f64; 2]>>], t: Complex64, r: usize, c: usize, what: &str) -> Result<CMatrix> {
        if rows.len() != r || rows.iter().any(|row| row.len() != c) {
            return Err(HodgeError::dim(format!("{what} must be {r}×{c}")));
        }
        Ok(CMatrix::from_fn(r, c, |i, j| Self::entry(&rows[i][j], t)))
    }

    pub fn hodge_numbers(&self) -> (usize, usize) {
        let h20 = self.b01.len();
        let h11 = self.b12.len();
        (h20, h11)
    }

    pub fn at(&self, t: Complex64) -> Result<BlockUpperUnipotent> {
        let (h20, h11) = self.hodge_numbers();
        BlockUpperUnipotent::new(
            Self::block(&self.b01, t, h20, h11, "B01")?,
            Self::block(&self.b02, t, h20, h20, "B02")?,
            Self::block(&self.b12, t, h11, h20, "B12")?,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusReport {
    pub radius: f64,
    pub cap: f64,
    pub trials: usize,
    /// Lowest-index direction failing just above `radius`, if any.
    pub worst_direction: Option<usize>,
}

pub const BISECTION_CAP: f64 = 0.999;
const BISECTION_STEPS: usize = 40;
const RAY_POINTS: usize = 8;

/// Largest `r ∈ (0, cap]` such that `ray_ok` accepts the blocks at norms
/// `r·j/RAY_POINTS`, `j = 0..=RAY_POINTS`, along every sampled direction.
pub fn bisect_radius<F, P>(frame: &F, trials: usize, seed: u64, ray_ok: P) -> Result<RadiusReport>
where
    F: DeformationFrame,
    P: Fn(&[BlockUpperUnipotent]) -> bool + Sync,
{
    if trials == 0 {
        return Err(HodgeError::invalid("at least one trial is required"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<F::Direction> = (0..trials).map(|_| frame.random_direction(&mut rng)).collect();
    let failing = |r: f64| -> Option<usize> {
        dirs.par_iter()
            .enumerate()
            .filter(|(_, d)| {
                let ray: Result<Vec<_>> =
                    (0..=RAY_POINTS).map(|j| frame.blocks_at(d, r * j as f64 / RAY_POINTS as f64)).collect();
                ray.map_or(true, |ray| !ray_ok(&ray))
            })
            .map(|(i, _)| i)
            .min()
    };
    let cap = BISECTION_CAP;
    let Some(first) = failing(cap) else {
        return Ok(RadiusReport { radius: cap, cap, trials, worst_direction: None });
    };
    let (mut lo, mut hi, mut worst) = (0.0, cap, first);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        match failing(mid) {
            None => lo = mid,
            Some(i) => {
                hi = mid;
                worst = i;
            }
        }
    }
    Ok(RadiusReport { radius: lo, cap, trials, worst_direction: Some(worst) })
}

/// Distance from the origin to the segment `[a, b]` in `ℂ`.
fn segment_distance(a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return a.norm();
    }
    let s = (-(a.conj() * d).re / len2).clamp(0.0, 1.0);
    (a + d * s).norm()
}

/// Empirical purity radius. A ray fails when `|det|` drops below `pd_margin`
/// at a sample or the interpolated determinant between neighbouring samples
/// passes within `pd_margin` of zero (a sign change on real rays).
pub fn stability_radius<F: DeformationFrame>(frame: &F, trials: usize, seed: u64, pd_margin: f64) -> Result<RadiusReport> {
    bisect_radius(frame, trials, seed, |ray| {
        let dets: Vec<Complex64> = ray.iter().map(purity_determinant).collect();
        dets.windows(2).all(|w| segment_distance(w[0], w[1]) >= pd_margin)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_complex_matrix;
    use crate::period::SyntheticScalarFrame;

    fn scalar(a: Complex64, b: Complex64, c: Complex64) -> BlockUpperUnipotent {
        let one = |z| CMatrix::from_element(1, 1, z);
        BlockUpperUnipotent::new(one(a), one(b), one(c)).unwrap()
    }

    #[test]
    fn scalar_determinant_cofactor_oracle() {
        assert_eq!(purity_determinant(&BlockUpperUnipotent::identity(2, 3)), c64(1.0, 0.0));
        let (a, b, c) = (c64(0.3, 0.7), c64(-0.2, 0.4), c64(1.1, -0.5));
        let want = 1.0 - a.conj() * c + a * b.conj() * c - b.norm_sqr();
        assert!((purity_determinant(&scalar(a, b, c)) - want).norm() < 1e-14);
    }

    #[test]
    fn transversality_of_synthetic_curves() {
        let (a, c) = (c64(0.4, 0.3), c64(-1.2, 0.5));
        let good = |t: &[Complex64]| Ok(scalar(a * t[0], a * c * t[0], c));
        let bad = |t: &[Complex64]| Ok(scalar(a * t[0], a * c * t[0] * t[0], c));
        let one = [c64(1.0, 0.0)];
        assert!(transversality_check(good, &one, 1e-4).unwrap().max <= 1e-10);
        let r = transversality_check(bad, &one, 1e-4).unwrap().max;
        assert!((r - (a * c).norm()).abs() < 1e-8);
        assert!(transversality_check(good, &one, 0.0).is_err());
    }

    #[test]
    fn polynomial_curve_from_json() {
        let json = r#"{"b01": [[[[0,0],[0.5,0]]]], "b02": [[[[1,0]]]], "b12": [[[[0,1]]]]}"#;
        let curve: PolyBlockCurve = serde_json::from_str(json).unwrap();
        let b = curve.at(c64(2.0, 0.0)).unwrap();
        assert_eq!((b.b01[(0, 0)], b.b02[(0, 0)], b.b12[(0, 0)]), (c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 1.0)));
        let bad: PolyBlockCurve = serde_json::from_str(r#"{"b01": [], "b02": [[[[1,0]]]], "b12": []}"#).unwrap();
        assert!(bad.at(c64(0.0, 0.0)).is_err());
    }

    #[test]
    fn dense_lu_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let blocks = BlockUpperUnipotent::new(
                random_complex_matrix(&mut rng, 2, 3).scale(0.3),
                random_complex_matrix(&mut rng, 2, 2).scale(0.3),
                random_complex_matrix(&mut rng, 3, 2).scale(0.3),
            )
            .unwrap();
            let mut dense = CMatrix::identity(7, 7);
            for i in 0..2 {
                for j in 0..3 {
                    dense[(i, 2 + j)] = blocks.b01[(i, j)];
                    dense[(5 + i, 2 + j)] = blocks.b01[(i, j)].conj();
                }
                for j in 0..2 {
                    dense[(i, 5 + j)] = blocks.b02[(i, j)];
                    dense[(5 + i, j)] = blocks.b02[(i, j)].conj();
                }
            }
            for i in 0..3 {
                for j in 0..2 {
                    dense[(2 + i, 5 + j)] = blocks.b12[(i, j)];
                }
            }
            assert!((dense.determinant() - purity_determinant(&blocks)).norm() < 1e-12);
        }
    }

    #[test]
    fn scalar_frame_radius_matches_root_finding() {
        let frame = SyntheticScalarFrame::new(c64(1.5, 0.0), c64(1.2, 0.0), c64(1.0, 0.0)).unwrap();
        let rep = stability_radius(&frame, 16, 7, 1e-12).unwrap();
        assert!(rep.radius > 0.0 && rep.radius < BISECTION_CAP);
        // real rays: first sign change of det, by fine scan + bisection
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut root = f64::INFINITY;
        for _ in 0..16 {
            let d = frame.random_direction(&mut rng);
            let det = |r: f64| purity_determinant(&frame.blocks_at(&d, r).unwrap()).re;
            let mut prev = 0.0;
            for k in 1..=2000 {
                let r = k as f64 * 0.0005;
                if det(r) <= 0.0 {
                    let (mut lo, mut hi) = (prev, r);
                    for _ in 0..60 {
                        let m = 0.5 * (lo + hi);
                        if det(m) > 0.0 { lo = m } else { hi = m }
                    }
                    root = root.min(lo);
                    break;
                }
                prev = r;
            }
        }
        assert!((rep.radius - root).abs() <= 0.05, "{} vs {root}", rep.radius);
    }

    #[test]
    fn empty_frame_saturates() {
        struct Curve;
        impl DeformationFrame for Curve {
            type Direction = ();
            fn hodge_numbers(&self) -> (usize, usize, usize) {
                (0, 1, 0)
            }
            fn random_direction(&self, _: &mut ChaCha8Rng) {}
            fn blocks_at(&self, _: &(), _: f64) -> Result<BlockUpperUnipotent> {
                Ok(BlockUpperUnipotent::identity(0, 1))
            }
        }
        assert_eq!(stability_radius(&Curve, 3, 0, 1e-12).unwrap().radius, BISECTION_CAP);
        assert!(stability_radius(&Curve, 0, 0, 1e-12).is_err());
    }
}
