//! Transport of a Kähler class along weight-2 period blocks.
//!
//! Along a block curve the class `σ(t) = α₀·η_(0) + [ω₀] + conj(α₀)·η_(2)`
//! stays of type `(1,1)` exactly when
//!
//! ```text
//! F(α₀) = conj(α₀) − α₁⁰·Φ^{1,2} − α₀·A = 0,   A = Φ^{0,2} − Φ^{0,1}·Φ^{1,2}.
//! ```
//!
//! `F` is real-linear in `α₀`; it is solved through the realified system in
//! the unknowns `(Re α₀, Im α₀)`, which is invertible whenever `‖A‖₂ < 1`.

mod metric;

pub use metric::{metric_update, positivity_check, MetricField, PositivityReport};

use log::debug;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::blocks::BlockUpperUnipotent;
use crate::dolbeault::{FormKind, TorusBackend};
use crate::error::{HodgeError, Result};
use crate::linalg::{c64, is_hermitian, spectral_norm, CMatrix};
use crate::period::{bisect_radius, stability_radius, DeformationFrame, FrameAlgebra, BISECTION_CAP};

/// Coordinates `α₁⁰` of the Kähler class `[ω₀]` in `η_(1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KahlerSeed {
    pub alpha: Vec<Complex64>,
}

impl KahlerSeed {
    pub fn new(alpha: Vec<Complex64>) -> Self {
        Self { alpha }
    }

    /// `ω₀ = i Σ H_{jk} dz_j ∧ dz̄_k` for Hermitian `H`, in the orthonormal
    /// constant frame of a torus (whose `(1,1)` masks are sorted ascending).
    pub fn from_hermitian(torus: &TorusBackend, h: &CMatrix) -> Result<Self> {
        let d = torus.dimension();
        if h.nrows() != d || !is_hermitian(h, 0.0) {
            return Err(HodgeError::invalid(format!("Kähler seed needs a Hermitian {d}×{d} matrix")));
        }
        let root = torus.volume().sqrt();
        let alpha = FormKind::Scalar { p: 1, q: 1 }
            .components(d)
            .into_iter()
            .map(|(_, m)| {
                let (j, k) = (m.trailing_zeros() as usize, (m >> d).trailing_zeros() as usize);
                c64(0.0, 1.0) * h[(j, k)] * root
            })
            .collect();
        Ok(Self { alpha })
    }

    /// Max deviation of the represented class from its own conjugate.
    pub fn reality_defect(&self, algebra: &FrameAlgebra) -> Result<f64> {
        let v = self.embed(algebra, &[])?;
        let c = algebra.conjugate(&v);
        Ok(v.iter().zip(&c).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    fn embed(&self, algebra: &FrameAlgebra, alpha0: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.alpha.len() != algebra.h11 {
            return Err(HodgeError::dim(format!("seed has {} entries, frame h11 = {}", self.alpha.len(), algebra.h11)));
        }
        let mut v = vec![c64(0.0, 0.0); algebra.dim()];
        v[algebra.h20..algebra.h20 + algebra.h11].copy_from_slice(&self.alpha);
        for (i, a) in alpha0.iter().enumerate() {
            v[i] = *a;
            v[algebra.h20 + algebra.h11 + i] = a.conj();
        }
        Ok(v)
    }
}

fn row_times(v: &[Complex64], m: &CMatrix) -> Vec<Complex64> {
    (0..m.ncols()).map(|j| v.iter().enumerate().map(|(i, x)| x * m[(i, j)]).sum()).collect()
}

fn euclid(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn check_shapes(alpha0_len: usize, blocks: &BlockUpperUnipotent, seed: &KahlerSeed) -> Result<()> {
    let (h20, h11, _) = blocks.hodge_numbers();
    if alpha0_len != h20 || seed.alpha.len() != h11 {
        return Err(HodgeError::dim(format!(
            "α₀ has {alpha0_len} and α₁⁰ {} entries; blocks have h20 = {h20}, h11 = {h11}",
            seed.alpha.len()
        )));
    }
    Ok(())
}

/// `conj(α₀) − α₁⁰·Φ^{1,2} − α₀·A`.
pub fn residual_f(alpha0: &[Complex64], blocks: &BlockUpperUnipotent, seed: &KahlerSeed) -> Result<Vec<Complex64>> {
    check_shapes(alpha0.len(), blocks, seed)?;
    let s = row_times(&seed.alpha, &blocks.b12);
    let aa = row_times(alpha0, &blocks.a_matrix());
    Ok(alpha0.iter().zip(s).zip(aa).map(|((a, s), x)| a.conj() - s - x).collect())
}

/// Realified Jacobian in the unknowns `(Re α₀, Im α₀)` (column layout):
/// `[[I − Aᵣᵀ, Aᵢᵀ], [−Aᵢᵀ, −I − Aᵣᵀ]]`.
pub fn realified_jacobian(a: &CMatrix) -> DMatrix<f64> {
    let n = a.nrows();
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let (ar, ai) = (a[(c, r)].re, a[(c, r)].im);
            let id = if r == c { 1.0 } else { 0.0 };
            j[(r, c)] = id - ar;
            j[(r, n + c)] = ai;
            j[(n + r, c)] = -ai;
            j[(n + r, n + c)] = -id - ar;
        }
    }
    j
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportState {
    pub alpha0: Vec<Complex64>,
    pub blocks: BlockUpperUnipotent,
    #[serde(with = "crate::linalg::serde_matrix")]
    pub a: CMatrix,
    pub a_norm: f64,
    pub residual: f64,
}

/// Unique solution of `F(α₀) = 0`; requires `‖A‖₂ < 1`.
pub fn solve_alpha0(blocks: &BlockUpperUnipotent, seed: &KahlerSeed) -> Result<TransportState> {
    let (h20, _, _) = blocks.hodge_numbers();
    check_shapes(h20, blocks, seed)?;
    let a = blocks.a_matrix();
    let a_norm = spectral_norm(&a);
    if a_norm >= 1.0 {
        return Err(HodgeError::BoundViolated(format!("‖A‖₂ = {a_norm:.6} must be < 1")));
    }
    let s = row_times(&seed.alpha, &blocks.b12);
    let rhs = DVector::from_iterator(2 * h20, s.iter().map(|z| z.re).chain(s.iter().map(|z| z.im)));
    let lu = realified_jacobian(&a).lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| HodgeError::Singular(format!("transport Jacobian singular at ‖A‖₂ = {a_norm:.6}")))?;
    let to_alpha = |x: &DVector<f64>| (0..h20).map(|i| c64(x[i], x[h20 + i])).collect::<Vec<_>>();
    // one step of iterative refinement
    let r = residual_f(&to_alpha(&x), blocks, seed)?;
    let rr = DVector::from_iterator(2 * h20, r.iter().map(|z| z.re).chain(r.iter().map(|z| z.im)));
    if let Some(dx) = lu.solve(&rr) {
        x -= dx;
    }
    let alpha0 = to_alpha(&x);
    let residual = euclid(&residual_f(&alpha0, blocks, seed)?);
    Ok(TransportState { alpha0, blocks: blocks.clone(), a, a_norm, residual })
}

/// `(α₀, α₁⁰, conj α₀)` over `(η_(0), η_(1), η_(2))`.
pub fn transported_class(alpha0: &[Complex64], seed: &KahlerSeed) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = alpha0.to_vec();
    v.extend_from_slice(&seed.alpha);
    v.extend(alpha0.iter().map(|z| z.conj()));
    v
}

/// `max |Q(σ, Ω_a)|, |Q(σ, conj Ω_a)|` over the rows
/// `Ω_a = η_(0),a + Φ^{0,1}_a·η_(1) + Φ^{0,2}_a·η_(2)`; zero iff `σ` is `(1,1)`.
pub fn type_defect(sigma: &[Complex64], blocks: &BlockUpperUnipotent, algebra: &FrameAlgebra) -> Result<f64> {
    let (h20, h11, _) = blocks.hodge_numbers();
    if sigma.len() != algebra.dim() || (h20, h11) != (algebra.h20, algebra.h11) {
        return Err(HodgeError::dim("class, blocks and frame disagree in shape"));
    }
    let mut worst = 0.0f64;
    for a in 0..h20 {
        let mut row = vec![c64(0.0, 0.0); algebra.dim()];
        row[a] = c64(1.0, 0.0);
        for b in 0..h11 {
            row[h20 + b] = blocks.b01[(a, b)];
        }
        for c in 0..h20 {
            row[h20 + h11 + c] = blocks.b02[(a, c)];
        }
        let conj_row = algebra.conjugate(&row);
        worst = worst.max(algebra.pair(sigma, &row).norm()).max(algebra.pair(sigma, &conj_row).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: f64,
    pub alpha0: Vec<Complex64>,
    pub a_norm: f64,
    pub residual: f64,
    /// Distance between predictor (previous α₀) and corrector.
    pub correction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub points: Vec<PathPoint>,
    /// Nominal sample index of the first `‖A‖₂ ≥ 1`, if the path was cut.
    pub truncated_at: Option<usize>,
    pub halvings: usize,
    pub sup_alpha0: f64,
    pub sup_a_norm: f64,
    pub sup_b12: f64,
    /// `‖α₁⁰‖·sup‖Φ^{1,2}‖₂ / (1 − sup‖A‖₂)`.
    pub bound: f64,
    pub certificate: bool,
}

impl ContinuationReport {
    pub fn endpoint(&self) -> Option<&[Complex64]> {
        self.points.last().map(|p| p.alpha0.as_slice())
    }
}

const GUARD: f64 = 0.95;

/// Predictor–corrector continuation of `α₀` over `steps` equal steps of
/// `[t0, t1]`. A step is halved when the point before it has `‖A‖₂ > 0.95`.
pub fn continue_path<F>(curve: F, seed: &KahlerSeed, t0: f64, t1: f64, steps: usize) -> Result<ContinuationReport>
where
    F: Fn(f64) -> Result<BlockUpperUnipotent>,
{
    if steps == 0 {
        return Err(HodgeError::invalid("continuation needs at least one step"));
    }
    let h = (t1 - t0) / steps as f64;
    let mut points: Vec<PathPoint> = Vec::new();
    let mut halvings = 0;
    let mut sup_b12 = 0.0f64;
    let mut truncated_at = None;

    let mut push = |t: f64, points: &mut Vec<PathPoint>| -> Result<bool> {
        let blocks = curve(t)?;
        let a_norm = spectral_norm(&blocks.a_matrix());
        if a_norm >= 1.0 {
            return Ok(false);
        }
        let state = solve_alpha0(&blocks, seed)?;
        let correction = points.last().map_or(0.0, |p: &PathPoint| {
            p.alpha0.iter().zip(&state.alpha0).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
        });
        sup_b12 = sup_b12.max(spectral_norm(&blocks.b12));
        points.push(PathPoint { t, alpha0: state.alpha0, a_norm, residual: state.residual, correction });
        Ok(true)
    };

    for k in 0..=steps {
        let t = t0 + h * k as f64;
        // halve the step leading into t when the previous point nears the guard
        if k > 0 && points.last().is_some_and(|p| p.a_norm > GUARD) {
            halvings += 1;
            if !push(t - 0.5 * h, &mut points)? {
                truncated_at = Some(k);
                break;
            }
        }
        if !push(t, &mut points)? {
            truncated_at = Some(k);
            break;
        }
    }
    if let Some(k) = truncated_at {
        debug!("continuation truncated at nominal sample {k}");
    }
    let sup_alpha0 = points.iter().map(|p| euclid(&p.alpha0)).fold(0.0, f64::max);
    let sup_a_norm = points.iter().map(|p| p.a_norm).fold(0.0, f64::max);
    let bound = euclid(&seed.alpha) * sup_b12 / (1.0 - sup_a_norm);
    Ok(ContinuationReport {
        certificate: sup_alpha0 <= bound + 1e-9,
        points,
        truncated_at,
        halvings,
        sup_alpha0,
        sup_a_norm,
        sup_b12,
        bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityProbe {
    pub c1: f64,
    pub c2: f64,
    pub c0: f64,
    pub cap: f64,
    pub trials: usize,
    /// `solve_alpha0` succeeded along every sampled ray up to `c0`.
    pub solve_ok: bool,
    pub failures: Vec<String>,
}

/// Empirical `c₂` (largest radius with `‖A‖₂ < 1`), `c₁` (purity radius) and
/// `c₀ = min(c₁, c₂, 1)`, then solves for `α₀` at norms up to `c₀`.
pub fn stability_region_probe<F: DeformationFrame>(
    frame: &F,
    seed: &KahlerSeed,
    rng_seed: u64,
    trials: usize,
    pd_margin: f64,
) -> Result<StabilityProbe> {
    let c1 = stability_radius(frame, trials, rng_seed, pd_margin)?.radius;
    let c2 = bisect_radius(frame, trials, rng_seed, |ray| ray.iter().all(|b| spectral_norm(&b.a_matrix()) < 1.0))?.radius;
    let c0 = c1.min(c2).min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut failures = Vec::new();
    for i in 0..trials {
        let dir = frame.random_direction(&mut rng);
        for j in 1..=4 {
            let r = c0 * j as f64 / 4.0;
            if let Err(e) = frame.blocks_at(&dir, r).and_then(|b| solve_alpha0(&b, seed)) {
                failures.push(format!("direction {i}, |φ| = {r:.4}: {e}"));
            }
        }
    }
    Ok(StabilityProbe { c1, c2, c0, cap: BISECTION_CAP, trials, solve_ok: failures.is_empty(), failures })
}
