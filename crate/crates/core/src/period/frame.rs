//! Adapted weight-2 frames: the torus frame of constant forms and a synthetic
//! scalar-block frame with prescribed block growth.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::quasi::quasi_period;
use crate::blocks::BlockUpperUnipotent;
use crate::dolbeault::exterior::{bidegree, wedge_sign, Mask};
use crate::dolbeault::{DolbeaultComplex, FormKind, TorusBackend, TorusForm};
use crate::error::{HodgeError, Result};
use crate::linalg::{c64, CMatrix};
use crate::series::Linear;

/// Anything that produces period blocks along rays `r · direction`, with
/// `‖direction‖ = 1` in the sup operator norm.
pub trait DeformationFrame: Sync {
    type Direction: Send + Sync;

    fn hodge_numbers(&self) -> (usize, usize, usize);
    fn random_direction(&self, rng: &mut ChaCha8Rng) -> Self::Direction;
    fn blocks_at(&self, direction: &Self::Direction, r: f64) -> Result<BlockUpperUnipotent>;
}

/// Polarization and complex conjugation in frame coordinates
/// `(η_(0), η_(1), η_(2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameAlgebra {
    pub h20: usize,
    pub h11: usize,
    /// `Q[i][j] = Q(e_i, e_j)`.
    pub q: CMatrix,
    /// `conj(Σ v_i e_i) = Σ_i (C · conj v)_i e_i`.
    pub conj: CMatrix,
}

impl FrameAlgebra {
    pub fn dim(&self) -> usize {
        2 * self.h20 + self.h11
    }

    /// Bilinear `Q(v, w)` of coordinate rows.
    pub fn pair(&self, v: &[Complex64], w: &[Complex64]) -> Complex64 {
        let mut s = c64(0.0, 0.0);
        for (i, vi) in v.iter().enumerate() {
            for (j, wj) in w.iter().enumerate() {
                s += vi * self.q[(i, j)] * wj;
            }
        }
        s
    }

    pub fn conjugate(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..v.len())
            .map(|i| (0..v.len()).map(|j| self.conj[(i, j)] * v[j].conj()).sum())
            .collect()
    }
}

/// `dz_I ∧ dz̄_J ↦ dz̄_I ∧ dz_J = (−1)^{|I||J|} dz_J ∧ dz̄_I`.
pub fn conjugate_mask(d: usize, m: Mask) -> (Mask, f64) {
    let low = (1 << d) - 1;
    let (hol, anti) = (m & low, m >> d);
    let (p, q) = bidegree(d, m);
    (anti | (hol << d), if (p * q) % 2 == 0 { 1.0 } else { -1.0 })
}

/// Orthonormal constant `(2,0)`, `(1,1)`, `(0,2)` forms on a flat torus.
#[derive(Debug, Clone)]
pub struct TorusFrame<'a> {
    backend: &'a TorusBackend,
    eta: [Vec<TorusForm>; 3],
}

impl<'a> TorusFrame<'a> {
    pub fn new(backend: &'a TorusBackend) -> Self {
        let eta = [(2, 0), (1, 1), (0, 2)].map(|(p, q)| backend.constant_basis(FormKind::Scalar { p, q }));
        Self { backend, eta }
    }

    pub fn backend(&self) -> &'a TorusBackend {
        self.backend
    }

    /// `η̃_(i)`, `i ∈ {0, 1, 2}`.
    pub fn eta(&self, i: usize) -> &[TorusForm] {
        &self.eta[i]
    }

    pub fn hodge(&self) -> (usize, usize, usize) {
        (self.eta[0].len(), self.eta[1].len(), self.eta[2].len())
    }

    fn all(&self) -> impl Iterator<Item = &TorusForm> {
        self.eta.iter().flatten()
    }

    fn single_mask(f: &TorusForm) -> (Mask, Complex64) {
        let comps = f.components();
        let zero = vec![0i64; 2 * f.dimension()];
        comps
            .iter()
            .map(|&(_, m)| (m, f.coefficient(&zero, 0, m)))
            .find(|(_, c)| c.norm() > 0.0)
            .expect("frame forms are nonzero monomials")
    }

    /// Max deviation of the frame from harmonic and orthonormal.
    pub fn validate(&self) -> Result<f64> {
        let b = self.backend;
        let forms: Vec<&TorusForm> = self.all().collect();
        let mut worst = 0.0f64;
        for (i, f) in forms.iter().enumerate() {
            worst = worst.max(b.l2_inner(&b.laplacian_form(f)?, &b.laplacian_form(f)?)?.norm().sqrt());
            for (j, g) in forms.iter().enumerate() {
                if f.kind() != g.kind() {
                    continue;
                }
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((b.l2_inner(f, g)? - c64(want, 0.0)).norm());
            }
        }
        Ok(worst)
    }

    /// `Q(a, b) = ∫ a ∧ b ∧ ω₀^{d−2}`, `ω₀ = i Σ dz_j ∧ dz̄_j`, and the
    /// conjugation matrix, both on the constant frame.
    pub fn algebra(&self) -> FrameAlgebra {
        let d = self.backend.dimension();
        let vol = self.backend.volume();
        let basis: Vec<(Mask, Complex64)> = self.all().map(Self::single_mask).collect();
        let n = basis.len();
        let top: Mask = (1 << (2 * d)) - 1;

        // ω₀^{d−2} as a list of monomials
        let mut kahler: Vec<(Mask, Complex64)> = vec![(0, c64(1.0, 0.0))];
        for _ in 0..d.saturating_sub(2) {
            let mut next = Vec::new();
            for &(m, c) in &kahler {
                for j in 0..d {
                    let g = (1 << j) | (1 << (d + j));
                    let s = wedge_sign(m, g).unwrap_or(0.0);
                    if s != 0.0 {
                        next.push((m | g, c * c64(0.0, s)));
                    }
                }
            }
            kahler = next;
        }

        let mut q = CMatrix::zeros(n, n);
        for (i, &(ma, ca)) in basis.iter().enumerate() {
            for (j, &(mb, cb)) in basis.iter().enumerate() {
                let Some(s1) = wedge_sign(ma, mb) else { continue };
                let mut acc = c64(0.0, 0.0);
                for &(mk, ck) in &kahler {
                    if let Some(s2) = wedge_sign(ma | mb, mk) {
                        if ma | mb | mk == top {
                            acc += ck * s1 * s2;
                        }
                    }
                }
                q[(i, j)] = acc * ca * cb * vol;
            }
        }

        let mut conj = CMatrix::zeros(n, n);
        for (j, &(m, c)) in basis.iter().enumerate() {
            let (cm, s) = conjugate_mask(d, m);
            let i = basis.iter().position(|&(mm, _)| mm == cm).expect("frame closed under conjugation");
            // conj(c e_m) = conj(c) s e_{cm} = conj(c) s / c_i · (c_i e_{cm})
            conj[(i, j)] = c.conj() * s / basis[i].1 / c.conj();
        }
        let (h20, h11, _) = self.hodge();
        FrameAlgebra { h20, h11, q, conj }
    }
}

impl DeformationFrame for TorusFrame<'_> {
    type Direction = TorusForm;

    fn hodge_numbers(&self) -> (usize, usize, usize) {
        self.hodge()
    }

    /// Random Beltrami differential normalized to unit sup operator norm.
    fn random_direction(&self, rng: &mut ChaCha8Rng) -> TorusForm {
        let f = self.backend.random_form(1, rng);
        let n = self.backend.norms(&f).sup_op;
        f.scaled(c64(1.0 / n, 0.0))
    }

    fn blocks_at(&self, direction: &TorusForm, r: f64) -> Result<BlockUpperUnipotent> {
        quasi_period(&direction.scaled(c64(r, 0.0)), self)
    }
}

/// `h^{2,0} = h^{1,1} = h^{0,2} = 1` frame with blocks linear in the radius:
/// `Φ^{0,1} = g₀₁ r u`, `Φ^{0,2} = g₀₂ r v`, `Φ^{1,2} = g₁₂ r w` for a
/// direction of signs `(u, v, w) ∈ {±1}³`. Real gains keep the determinant
/// real along rays, so its zeros are sign changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticScalarFrame {
    pub g01: Complex64,
    pub g02: Complex64,
    pub g12: Complex64,
}

impl DeformationFrame for SyntheticScalarFrame {
    type Direction = [f64; 3];

    fn hodge_numbers(&self) -> (usize, usize, usize) {
        (1, 1, 1)
    }

    fn random_direction(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        let mut sign = || if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        [sign(), sign(), sign()]
    }

    fn blocks_at(&self, dir: &[f64; 3], r: f64) -> Result<BlockUpperUnipotent> {
        let one = |z: Complex64| CMatrix::from_element(1, 1, z * r);
        BlockUpperUnipotent::new(one(self.g01 * dir[0]), one(self.g02 * dir[1]), one(self.g12 * dir[2]))
    }
}

impl SyntheticScalarFrame {
    pub fn new(g01: Complex64, g02: Complex64, g12: Complex64) -> Result<Self> {
        if [g01, g02, g12].iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(HodgeError::invalid("synthetic gains must be finite"));
        }
        Ok(Self { g01, g02, g12 })
    }
}
