//! Flat complex torus `(ℂ/Λ)^d`, `Λ = L(ℤ + τℤ)`, with truncated Fourier modes.
//!
//! Modes are `μ = (m₁, n₁, …, m_d, n_d)` with `‖μ‖_∞ ≤ K`, basis functions
//! `e^{2πi(m u + n v)}` where `z = L(u + τ v)`. With `τ = a + ib` and
//! `β = (n − a m)/b` the derivative symbols are
//!
//! ```text
//! ∂/∂z̄ ↦ s̄ = (πi/L)(m + iβ),    ∂/∂z ↦ s = (πi/L)(m − iβ) = −conj(s̄)
//! ```
//!
//! Basis monomials `dz_I ∧ dz̄_J` are orthonormal pointwise, so the L² product
//! is `vol · Σ c·conj(c')` over modes and components.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exterior::{
    holomorphic_bit, interior, masks_of_bidegree, wedge_generator, wedge_sign,
    Mask,
};
use super::fft::GridFft;
use super::{DolbeaultComplex, NormReport};
use crate::error::{HodgeError, Result};
use crate::series::Linear;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FormKind {
    /// `T^{1,0}`-valued `(0,q)`-form.
    Vector { q: usize },
    /// Scalar `(p,q)`-form.
    Scalar { p: usize, q: usize },
}

impl FormKind {
    /// `(vector index, mask)` pairs in storage order; the vector index is 0
    /// for scalar forms.
    pub fn components(self, d: usize) -> Vec<(usize, Mask)> {
        match self {
            FormKind::Vector { q } => {
                let masks = masks_of_bidegree(d, 0, q);
                (0..d).flat_map(|i| masks.iter().map(move |&m| (i, m))).collect()
            }
            FormKind::Scalar { p, q } => {
                masks_of_bidegree(d, p, q).into_iter().map(|m| (0, m)).collect()
            }
        }
    }

    pub fn q(self) -> usize {
        match self {
            FormKind::Vector { q } | FormKind::Scalar { q, .. } => q,
        }
    }

    fn with_q(self, q: usize) -> Self {
        match self {
            FormKind::Vector { .. } => FormKind::Vector { q },
            FormKind::Scalar { p, .. } => FormKind::Scalar { p, q },
        }
    }
}

fn component_index(comps: &[(usize, Mask)], key: (usize, Mask)) -> Option<usize> {
    comps.binary_search(&key).ok()
}

fn mode_count(d: usize, k: usize) -> usize {
    (2 * k + 1).pow(2 * d as u32)
}

fn decode_mode(mut idx: usize, d: usize, k: usize, out: &mut [i64]) {
    let base = 2 * k + 1;
    for slot in out.iter_mut().take(2 * d) {
        *slot = (idx % base) as i64 - k as i64;
        idx /= base;
    }
}

fn encode_mode(mu: &[i64], k: usize) -> Option<usize> {
    let base = 2 * k as i64 + 1;
    let mut idx = 0i64;
    for &m in mu.iter().rev() {
        if m.unsigned_abs() as usize > k {
            return None;
        }
        idx = idx * base + (m + k as i64);
    }
    Some(idx as usize)
}

/// Coefficient tensor `c[μ][component]` of a form with its own mode cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusForm {
    d: usize,
    kind: FormKind,
    cutoff: usize,
    data: Vec<Complex64>,
    /// L² mass discarded because a product exceeded the backend band.
    overflow: f64,
}

impl TorusForm {
    pub fn zero(d: usize, kind: FormKind, cutoff: usize) -> Self {
        let ncomp = kind.components(d).len();
        Self { d, kind, cutoff, data: vec![ZERO; mode_count(d, cutoff) * ncomp], overflow: 0.0 }
    }

    /// Constant form from `(vector index, mask, value)` entries.
    pub fn constant(d: usize, kind: FormKind, entries: &[(usize, Mask, Complex64)]) -> Result<Self> {
        let mut f = Self::zero(d, kind, 0);
        let zero_mode = vec![0i64; 2 * d];
        for &(i, m, c) in entries {
            f.set(&zero_mode, i, m, c)?;
        }
        Ok(f)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn overflow(&self) -> f64 {
        self.overflow
    }

    pub fn components(&self) -> Vec<(usize, Mask)> {
        self.kind.components(self.d)
    }

    fn ncomp(&self) -> usize {
        if self.data.is_empty() {
            self.kind.components(self.d).len()
        } else {
            self.data.len() / mode_count(self.d, self.cutoff)
        }
    }

    pub fn coefficient(&self, mu: &[i64], i: usize, mask: Mask) -> Complex64 {
        let comps = self.components();
        match (encode_mode(mu, self.cutoff), component_index(&comps, (i, mask))) {
            (Some(mi), Some(ci)) => self.data[mi * comps.len() + ci],
            _ => ZERO,
        }
    }

    pub fn set(&mut self, mu: &[i64], i: usize, mask: Mask, value: Complex64) -> Result<()> {
        if mu.len() != 2 * self.d {
            return Err(HodgeError::dim(format!("mode has length {}, expected {}", mu.len(), 2 * self.d)));
        }
        let comps = self.components();
        let ci = component_index(&comps, (i, mask))
            .ok_or_else(|| HodgeError::dim(format!("component ({i}, {mask:#b}) not in {:?}", self.kind)))?;
        let mi = encode_mode(mu, self.cutoff)
            .ok_or_else(|| HodgeError::dim(format!("mode {mu:?} beyond cutoff {}", self.cutoff)))?;
        self.data[mi * comps.len() + ci] = value;
        Ok(())
    }

    /// Coefficients re-laid out at another cutoff; modes beyond it are dropped.
    pub fn resized(&self, cutoff: usize) -> Self {
        if cutoff == self.cutoff {
            return self.clone();
        }
        let ncomp = self.ncomp();
        let mut out = Self::zero(self.d, self.kind, cutoff);
        out.overflow = self.overflow;
        let mut mu = vec![0i64; 2 * self.d];
        for mi in 0..mode_count(self.d, self.cutoff) {
            decode_mode(mi, self.d, self.cutoff, &mut mu);
            if let Some(mj) = encode_mode(&mu, cutoff) {
                out.data[mj * ncomp..(mj + 1) * ncomp]
                    .copy_from_slice(&self.data[mi * ncomp..(mi + 1) * ncomp]);
            }
        }
        out
    }

    /// Point value of every component at `x ∈ [0,1)^{2d}` (coordinates
    /// `(u₁, v₁, …)`), by direct modal summation.
    pub fn eval_at(&self, x: &[f64]) -> Vec<Complex64> {
        let ncomp = self.ncomp();
        let mut out = vec![ZERO; ncomp];
        let mut mu = vec![0i64; 2 * self.d];
        for mi in 0..mode_count(self.d, self.cutoff) {
            decode_mode(mi, self.d, self.cutoff, &mut mu);
            let phase: f64 = mu.iter().zip(x).map(|(&m, &xa)| m as f64 * xa).sum();
            let e = Complex64::from_polar(1.0, 2.0 * PI * phase);
            for (c, o) in self.data[mi * ncomp..(mi + 1) * ncomp].iter().zip(out.iter_mut()) {
                *o += c * e;
            }
        }
        out
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, c| a.max(c.norm()))
    }
}

impl Linear for TorusForm {
    fn zero_like(&self) -> Self {
        Self::zero(self.d, self.kind, self.cutoff)
    }

    fn axpy(&mut self, a: Complex64, x: &Self) {
        assert!(
            self.d == x.d && self.kind == x.kind,
            "axpy between {:?} and {:?}",
            self.kind,
            x.kind
        );
        if x.cutoff > self.cutoff {
            *self = self.resized(x.cutoff);
        }
        let x = if x.cutoff < self.cutoff { std::borrow::Cow::Owned(x.resized(self.cutoff)) } else { std::borrow::Cow::Borrowed(x) };
        for (s, v) in self.data.iter_mut().zip(&x.data) {
            *s += a * v;
        }
        self.overflow = self.overflow.max(x.overflow);
    }

    fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

/// Scalar form of mixed type, one [`TorusForm`] per bidegree.
#[derive(Debug, Clone, Default)]
pub struct ScalarForm {
    d: usize,
    parts: BTreeMap<(usize, usize), TorusForm>,
}

impl ScalarForm {
    pub fn new(d: usize) -> Self {
        Self { d, parts: BTreeMap::new() }
    }

    pub fn from_form(f: TorusForm) -> Result<Self> {
        let mut s = Self::new(f.d);
        s.add_part(f)?;
        Ok(s)
    }

    pub fn add_part(&mut self, f: TorusForm) -> Result<()> {
        let FormKind::Scalar { p, q } = f.kind else {
            return Err(HodgeError::dim("vector-valued form in a scalar form"));
        };
        match self.parts.get_mut(&(p, q)) {
            Some(existing) => existing.axpy(ONE, &f),
            None => {
                self.parts.insert((p, q), f);
            }
        }
        Ok(())
    }

    pub fn part(&self, p: usize, q: usize) -> Option<&TorusForm> {
        self.parts.get(&(p, q))
    }

    pub fn parts(&self) -> impl Iterator<Item = &TorusForm> {
        self.parts.values()
    }
}

impl PartialEq for ScalarForm {
    /// Equality of the represented form: absent and zero parts agree.
    fn eq(&self, other: &Self) -> bool {
        let nonzero = |s: &Self| -> Vec<((usize, usize), TorusForm)> {
            s.parts.iter().filter(|(_, f)| !f.is_zero()).map(|(k, f)| (*k, f.clone())).collect()
        };
        self.d == other.d && nonzero(self) == nonzero(other)
    }
}

impl Linear for ScalarForm {
    fn zero_like(&self) -> Self {
        Self::new(self.d)
    }

    fn axpy(&mut self, a: Complex64, x: &Self) {
        self.d = x.d.max(self.d);
        for (key, f) in &x.parts {
            match self.parts.get_mut(key) {
                Some(existing) => existing.axpy(a, f),
                None => {
                    self.parts.insert(*key, f.scaled(a));
                }
            }
        }
    }

    fn is_zero(&self) -> bool {
        self.parts.values().all(Linear::is_zero)
    }
}

fn default_tau() -> [f64; 2] {
    [0.0, 1.0]
}

fn default_volume() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusConfig {
    pub d: usize,
    /// Mode cutoff `K`.
    pub k: i64,
    #[serde(default = "default_tau")]
    pub tau: [f64; 2],
    #[serde(default = "default_volume")]
    pub volume: f64,
    /// Largest cutoff a product may carry before it is truncated and flagged.
    #[serde(default)]
    pub max_cutoff: Option<usize>,
}

impl TorusConfig {
    pub fn build(&self) -> Result<TorusBackend> {
        if self.k < 0 {
            return Err(HodgeError::invalid(format!("mode cutoff must be non-negative, got {}", self.k)));
        }
        let b = TorusBackend::new(self.d, self.k as usize, Complex64::new(self.tau[0], self.tau[1]), self.volume)?;
        Ok(match self.max_cutoff {
            Some(m) => b.with_max_cutoff(m),
            None => b,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum SymbolOp {
    Dbar,
    Del,
    DbarStar,
}

struct Rule {
    ca: usize,
    cb: usize,
    co: usize,
    sign: f64,
}

struct Product<'a> {
    a: &'a TorusForm,
    b: &'a TorusForm,
    rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorusBackend {
    d: usize,
    k: usize,
    tau: Complex64,
    volume: f64,
    scale: f64,
    max_cutoff: usize,
}

impl TorusBackend {
    pub fn new(d: usize, k: usize, tau: Complex64, volume: f64) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(HodgeError::invalid(format!("torus dimension must be 1, 2 or 3, got {d}")));
        }
        if !(tau.im > 0.0) || !tau.re.is_finite() {
            return Err(HodgeError::invalid(format!("modulus must lie in the upper half plane, got {tau}")));
        }
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(HodgeError::invalid(format!("volume must be positive, got {volume}")));
        }
        let scale = (volume.powf(1.0 / d as f64) / tau.im).sqrt();
        Ok(Self { d, k, tau, volume, scale, max_cutoff: (4 * k).max(1) })
    }

    pub fn with_max_cutoff(mut self, max_cutoff: usize) -> Self {
        self.max_cutoff = max_cutoff;
        self
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn cutoff(&self) -> usize {
        self.k
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Lattice scale `L`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Per-factor `(s̄_j, s_j)` symbols of `∂/∂z̄_j`, `∂/∂z_j` at mode `μ`.
    pub fn symbols(&self, mu: &[i64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let (a, b) = (self.tau.re, self.tau.im);
        let f = PI / self.scale;
        (0..self.d)
            .map(|j| {
                let (m, n) = (mu[2 * j] as f64, mu[2 * j + 1] as f64);
                let beta = (n - a * m) / b;
                (Complex64::new(-f * beta, f * m), Complex64::new(f * beta, f * m))
            })
            .unzip()
    }

    fn eigenvalue(&self, mu: &[i64]) -> f64 {
        self.symbols(mu).0.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn zero_form(&self, kind: FormKind, cutoff: usize) -> TorusForm {
        TorusForm::zero(self.d, kind, cutoff)
    }

    fn check(&self, f: &TorusForm) -> Result<()> {
        if f.d != self.d {
            return Err(HodgeError::dim(format!("form on a {}-torus given to a {}-torus backend", f.d, self.d)));
        }
        Ok(())
    }

    fn symbol_op(&self, f: &TorusForm, op: SymbolOp) -> Result<TorusForm> {
        self.check(f)?;
        let d = self.d;
        let out_kind = match (op, f.kind) {
            (SymbolOp::Dbar, k) => k.with_q(k.q() + 1),
            (SymbolOp::DbarStar, k) => {
                if k.q() == 0 {
                    return Err(HodgeError::dim("∂̄* of a degree-0 form"));
                }
                k.with_q(k.q() - 1)
            }
            (SymbolOp::Del, FormKind::Scalar { p, q }) => FormKind::Scalar { p: p + 1, q },
            (SymbolOp::Del, FormKind::Vector { .. }) => {
                return Err(HodgeError::dim("∂ is only defined on scalar forms"))
            }
        };
        let in_comps = f.components();
        let out_comps = out_kind.components(d);
        // (input comp, output comp, factor j, sign)
        let mut moves = Vec::new();
        for (ci, &(i, m)) in in_comps.iter().enumerate() {
            for j in 0..d {
                let hit = match op {
                    SymbolOp::Dbar => wedge_generator(d + j, m),
                    SymbolOp::Del => wedge_generator(j, m),
                    SymbolOp::DbarStar => interior(d + j, m),
                };
                if let Some((m2, s)) = hit {
                    if let Some(co) = component_index(&out_comps, (i, m2)) {
                        moves.push((ci, co, j, s));
                    }
                }
            }
        }
        let mut out = TorusForm::zero(d, out_kind, f.cutoff);
        out.overflow = f.overflow;
        if moves.is_empty() {
            return Ok(out);
        }
        let (ni, no) = (in_comps.len(), out_comps.len());
        out.data.par_chunks_mut(no).enumerate().for_each(|(mi, chunk)| {
            let mut mu = vec![0i64; 2 * d];
            decode_mode(mi, d, f.cutoff, &mut mu);
            let (sbar, s) = self.symbols(&mu);
            let input = &f.data[mi * ni..(mi + 1) * ni];
            for &(ci, co, j, sign) in &moves {
                let sym = match op {
                    SymbolOp::Dbar => sbar[j],
                    SymbolOp::Del => s[j],
                    SymbolOp::DbarStar => sbar[j].conj(),
                };
                chunk[co] += sym * sign * input[ci];
            }
        });
        Ok(out)
    }

    pub fn dbar_form(&self, f: &TorusForm) -> Result<TorusForm> {
        self.symbol_op(f, SymbolOp::Dbar)
    }

    pub fn dbar_star_form(&self, f: &TorusForm) -> Result<TorusForm> {
        self.symbol_op(f, SymbolOp::DbarStar)
    }

    /// Holomorphic differential `∂` on scalar forms.
    pub fn del(&self, f: &TorusForm) -> Result<TorusForm> {
        self.symbol_op(f, SymbolOp::Del)
    }

    /// `d = ∂ + ∂̄`, returned as its two bidegree parts.
    pub fn exterior_derivative(&self, f: &TorusForm) -> Result<(TorusForm, TorusForm)> {
        Ok((self.del(f)?, self.dbar_form(f)?))
    }

    /// `∂̄∂̄* + ∂̄*∂̄`, composed literally.
    pub fn laplacian_form(&self, f: &TorusForm) -> Result<TorusForm> {
        let mut out = self.dbar_star_form(&self.dbar_form(f)?)?;
        if f.kind.q() > 0 {
            out.axpy(ONE, &self.dbar_form(&self.dbar_star_form(f)?)?);
        }
        Ok(out)
    }

    fn modewise(&self, f: &TorusForm, g: impl Fn(&[i64]) -> f64 + Sync) -> Result<TorusForm> {
        self.check(f)?;
        let mut out = f.clone();
        let ncomp = f.ncomp();
        if ncomp == 0 {
            return Ok(out);
        }
        out.data.par_chunks_mut(ncomp).enumerate().for_each(|(mi, chunk)| {
            let mut mu = vec![0i64; 2 * self.d];
            decode_mode(mi, self.d, f.cutoff, &mut mu);
            let w = g(&mu);
            for c in chunk.iter_mut() {
                *c *= w;
            }
        });
        Ok(out)
    }

    pub fn green_form(&self, f: &TorusForm) -> Result<TorusForm> {
        self.modewise(f, |mu| {
            let lam = self.eigenvalue(mu);
            if mu.iter().all(|&m| m == 0) { 0.0 } else { 1.0 / lam }
        })
    }

    pub fn harmonic_form(&self, f: &TorusForm) -> Result<TorusForm> {
        self.modewise(f, |mu| if mu.iter().all(|&m| m == 0) { 1.0 } else { 0.0 })
    }

    /// `f(x + a)` for a real shift `a ∈ ℝ^{2d}` in `(u, v)` coordinates.
    pub fn translate(&self, f: &TorusForm, shift: &[f64]) -> Result<TorusForm> {
        self.check(f)?;
        if shift.len() != 2 * self.d {
            return Err(HodgeError::dim("translation vector must have length 2d"));
        }
        let mut out = f.clone();
        let ncomp = f.ncomp();
        let mut mu = vec![0i64; 2 * self.d];
        for mi in 0..mode_count(self.d, f.cutoff) {
            decode_mode(mi, self.d, f.cutoff, &mut mu);
            let phase: f64 = mu.iter().zip(shift).map(|(&m, &a)| m as f64 * a).sum();
            let e = Complex64::from_polar(1.0, 2.0 * PI * phase);
            for c in &mut out.data[mi * ncomp..(mi + 1) * ncomp] {
                *c *= e;
            }
        }
        Ok(out)
    }

    /// Coefficient-wise `∂/∂z_j` (`holomorphic`) or `∂/∂z̄_j`.
    pub fn derivative(&self, f: &TorusForm, j: usize, holomorphic: bool) -> Result<TorusForm> {
        self.check(f)?;
        let mut out = f.clone();
        let ncomp = f.ncomp();
        let mut mu = vec![0i64; 2 * self.d];
        for mi in 0..mode_count(self.d, f.cutoff) {
            decode_mode(mi, self.d, f.cutoff, &mut mu);
            let (sbar, s) = self.symbols(&mu);
            let sym = if holomorphic { s[j] } else { sbar[j] };
            for c in &mut out.data[mi * ncomp..(mi + 1) * ncomp] {
                *c *= sym;
            }
        }
        Ok(out)
    }

    pub fn l2_inner(&self, a: &TorusForm, b: &TorusForm) -> Result<Complex64> {
        self.check(a)?;
        self.check(b)?;
        if a.kind != b.kind {
            return Err(HodgeError::dim(format!("inner product of {:?} with {:?}", a.kind, b.kind)));
        }
        let k = a.cutoff.min(b.cutoff);
        let (a, b) = (a.resized(k), b.resized(k));
        let s: Complex64 = a.data.iter().zip(&b.data).map(|(x, y)| x * y.conj()).sum();
        Ok(s * self.volume)
    }

    fn grid_of(&self, f: &TorusForm, comp: usize, fft: &GridFft) -> Vec<Complex64> {
        let n = fft.n() as i64;
        let ncomp = f.ncomp();
        let mut grid = vec![ZERO; fft.len()];
        let mut mu = vec![0i64; 2 * self.d];
        for mi in 0..mode_count(self.d, f.cutoff) {
            decode_mode(mi, self.d, f.cutoff, &mut mu);
            let mut idx = 0usize;
            for &m in mu.iter().rev() {
                idx = idx * n as usize + m.rem_euclid(n) as usize;
            }
            grid[idx] += f.data[mi * ncomp + comp];
        }
        fft.synthesize(&mut grid);
        grid
    }

    /// Values of every component on the uniform `n^{2d}` grid.
    pub fn grid_values(&self, f: &TorusForm, n: usize) -> Vec<Vec<Complex64>> {
        let fft = GridFft::new(n.max(1), 2 * self.d);
        (0..f.ncomp()).into_par_iter().map(|c| self.grid_of(f, c, &fft)).collect()
    }

    /// Grid density used for sup norms: 4 points per highest mode per real
    /// dimension.
    pub fn norm_grid(&self, f: &TorusForm) -> usize {
        (4 * f.cutoff).max(1)
    }

    /// The `c0` entry of [`Self::form_norms`] without the derivative grids.
    pub fn sup_norm(&self, f: &TorusForm) -> f64 {
        if f.cutoff == 0 || f.data.is_empty() {
            return f.max_abs();
        }
        self.grid_values(f, self.norm_grid(f)).iter().flatten().fold(0.0f64, |a, c| a.max(c.norm()))
    }

    pub fn form_norms(&self, f: &TorusForm) -> NormReport {
        let w0 = (self.volume * f.data.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt();
        if f.data.is_empty() {
            return NormReport::default();
        }
        if f.cutoff == 0 {
            // constant form: grid evaluation is the coefficient itself
            let c0 = f.max_abs();
            let sup_op = self.pointwise_op_norm(f, &f.data);
            return NormReport { c0, sup_op, w0, c1: c0 };
        }
        let n = self.norm_grid(f);
        let grids = self.grid_values(f, n);
        let npts = grids[0].len();
        let c0 = grids.iter().flatten().fold(0.0f64, |a, c| a.max(c.norm()));
        let sup_op = (0..npts)
            .into_par_iter()
            .map(|x| {
                let vals: Vec<Complex64> = grids.iter().map(|g| g[x]).collect();
                self.pointwise_op_norm(f, &vals)
            })
            .reduce(|| 0.0, f64::max);
        let mut sup_per_comp: Vec<f64> =
            grids.iter().map(|g| g.iter().fold(0.0f64, |a, c| a.max(c.norm()))).collect();
        for j in 0..self.d {
            for hol in [true, false] {
                let df = self.derivative(f, j, hol).expect("same backend");
                for (acc, g) in sup_per_comp.iter_mut().zip(self.grid_values(&df, n)) {
                    *acc += g.iter().fold(0.0f64, |a, c| a.max(c.norm()));
                }
            }
        }
        let c1 = sup_per_comp.into_iter().fold(0.0, f64::max);
        NormReport { c0, sup_op, w0, c1 }
    }

    /// Largest singular value of the `d×d` coefficient matrix for `(0,1)`
    /// vector forms, the pointwise Euclidean norm otherwise.
    fn pointwise_op_norm(&self, f: &TorusForm, vals: &[Complex64]) -> f64 {
        let d = self.d;
        if f.kind != (FormKind::Vector { q: 1 }) {
            return vals.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        }
        // components are ordered (i, dz̄_j) with j ascending
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| vals[i * d + j]);
        match d {
            1 => m[(0, 0)].norm(),
            2 => {
                let h = m.adjoint() * &m;
                let (a, c, b) = (h[(0, 0)].re, h[(1, 1)].re, h[(0, 1)]);
                let disc = ((a - c) * (a - c) + 4.0 * b.norm_sqr()).sqrt();
                (0.5 * (a + c + disc)).max(0.0).sqrt()
            }
            _ => m.singular_values().iter().fold(0.0f64, |x, &s| x.max(s)),
        }
    }

    /// `Σ_terms Σ_rules sign · a[ca] · b[cb]` pointwise into component `co`,
    /// on a 2×-padded grid. The full product band is recovered exactly; modes
    /// beyond the backend `max_cutoff` are dropped and recorded in `overflow`.
    fn pointwise_sum(&self, terms: &[Product<'_>], out_kind: FormKind, what: &str) -> TorusForm {
        let d = self.d;
        let band = terms.iter().map(|t| t.a.cutoff + t.b.cutoff).max().unwrap_or(0);
        let kmax = terms.iter().map(|t| t.a.cutoff.max(t.b.cutoff)).max().unwrap_or(0);
        let no = out_kind.components(d).len();
        let mut full = TorusForm::zero(d, out_kind, band);
        full.overflow = terms.iter().map(|t| t.a.overflow.max(t.b.overflow)).fold(0.0, f64::max);
        if no == 0 {
            return full.resized(band.min(self.max_cutoff));
        }

        let (spectral, gridded): (Vec<&Product>, Vec<&Product>) =
            terms.iter().partition(|t| t.a.cutoff == 0 || t.b.cutoff == 0);

        // one factor constant: a plain scaling in coefficient space
        for t in spectral {
            let (konst, var, const_is_a) = if t.a.cutoff == 0 { (t.a, t.b, true) } else { (t.b, t.a, false) };
            let var_full = var.resized(band);
            let nv = var_full.ncomp();
            for r in &t.rules {
                let (kc, vc) = if const_is_a { (r.ca, r.cb) } else { (r.cb, r.ca) };
                let w = konst.data[kc] * r.sign;
                if w == ZERO {
                    continue;
                }
                for mi in 0..mode_count(d, band) {
                    full.data[mi * no + r.co] += w * var_full.data[mi * nv + vc];
                }
            }
        }

        if !gridded.is_empty() {
            let n = 2 * (2 * kmax + 1);
            let fft = GridFft::new(n, 2 * d);
            let mut out_grids = vec![vec![ZERO; fft.len()]; no];
            for t in gridded {
                let mut need_a: Vec<usize> = t.rules.iter().map(|r| r.ca).collect();
                let mut need_b: Vec<usize> = t.rules.iter().map(|r| r.cb).collect();
                need_a.sort_unstable();
                need_a.dedup();
                need_b.sort_unstable();
                need_b.dedup();
                let ga: BTreeMap<usize, Vec<Complex64>> =
                    need_a.par_iter().map(|&c| (c, self.grid_of(t.a, c, &fft))).collect();
                let gb: BTreeMap<usize, Vec<Complex64>> =
                    need_b.par_iter().map(|&c| (c, self.grid_of(t.b, c, &fft))).collect();
                out_grids.par_iter_mut().enumerate().for_each(|(co, og)| {
                    for r in t.rules.iter().filter(|r| r.co == co) {
                        let (x, y) = (&ga[&r.ca], &gb[&r.cb]);
                        for ((o, u), v) in og.iter_mut().zip(x).zip(y) {
                            *o += u * v * r.sign;
                        }
                    }
                });
            }
            let ni = n as i64;
            let spectra: Vec<Vec<Complex64>> = out_grids
                .into_par_iter()
                .map(|mut g| {
                    fft.analyze(&mut g);
                    g
                })
                .collect();
            let mut mu = vec![0i64; 2 * d];
            for mi in 0..mode_count(d, band) {
                decode_mode(mi, d, band, &mut mu);
                let mut idx = 0usize;
                for &m in mu.iter().rev() {
                    idx = idx * n + m.rem_euclid(ni) as usize;
                }
                for (co, s) in spectra.iter().enumerate() {
                    full.data[mi * no + co] += s[idx];
                }
            }
        }

        if band <= self.max_cutoff {
            return full;
        }
        let kept = full.resized(self.max_cutoff);
        let dropped = self.volume
            * (full.data.iter().map(|c| c.norm_sqr()).sum::<f64>()
                - kept.data.iter().map(|c| c.norm_sqr()).sum::<f64>());
        let mut out = kept;
        let lost = dropped.max(0.0).sqrt();
        if lost > 0.0 {
            warn!(
                "{what}: product band {band} exceeds max cutoff {}; truncated L² mass {lost:.3e}",
                self.max_cutoff
            );
        }
        out.overflow = out.overflow.max(lost);
        out
    }

    /// `[φ, ψ]` for vector forms of any degrees.
    pub fn bracket_forms(&self, phi: &TorusForm, psi: &TorusForm) -> Result<TorusForm> {
        self.check(phi)?;
        self.check(psi)?;
        let (FormKind::Vector { q: p }, FormKind::Vector { q }) = (phi.kind, psi.kind) else {
            return Err(HodgeError::dim("bracket needs two vector-valued forms"));
        };
        let d = self.d;
        let out_kind = FormKind::Vector { q: p + q };
        let out_comps = out_kind.components(d);
        let (cp, cq) = (phi.components(), psi.components());
        let dpsi: Vec<TorusForm> = (0..d).map(|i| self.derivative(psi, i, true)).collect::<Result<_>>()?;
        let dphi: Vec<TorusForm> = (0..d).map(|i| self.derivative(phi, i, true)).collect::<Result<_>>()?;
        let second = if (p * q) % 2 == 0 { -1.0 } else { 1.0 };

        let rules = |left: &[(usize, Mask)], right: &[(usize, Mask)], i: usize, scale: f64| {
            let mut rs = Vec::new();
            for (ca, &(ii, m1)) in left.iter().enumerate() {
                if ii != i {
                    continue;
                }
                for (cb, &(k, m2)) in right.iter().enumerate() {
                    if let Some(s) = wedge_sign(m1, m2) {
                        if let Some(co) = component_index(&out_comps, (k, m1 | m2)) {
                            rs.push(Rule { ca, cb, co, sign: scale * s });
                        }
                    }
                }
            }
            rs
        };
        let mut terms = Vec::with_capacity(2 * d);
        for i in 0..d {
            terms.push(Product { a: phi, b: &dpsi[i], rules: rules(&cp, &cq, i, 1.0) });
            terms.push(Product { a: psi, b: &dphi[i], rules: rules(&cq, &cp, i, second) });
        }
        Ok(self.pointwise_sum(&terms, out_kind, "bracket"))
    }

    /// `i_φ ω = Σ_i φ^i ∧ ι_{∂_i} ω` for a vector `(0,q)`-form and a scalar
    /// `(p,r)`-form, `p ≥ 1`.
    pub fn contract_form(&self, phi: &TorusForm, omega: &TorusForm) -> Result<TorusForm> {
        self.check(phi)?;
        self.check(omega)?;
        let (FormKind::Vector { q }, FormKind::Scalar { p, q: r }) = (phi.kind, omega.kind) else {
            return Err(HodgeError::dim("contraction needs a vector form and a scalar form"));
        };
        if p == 0 {
            return Err(HodgeError::invalid("contraction into a (0,q)-form"));
        }
        let out_kind = FormKind::Scalar { p: p - 1, q: r + q };
        let out_comps = out_kind.components(self.d);
        let mut rs = Vec::new();
        for (ca, &(i, m1)) in phi.components().iter().enumerate() {
            for (cb, &(_, m2)) in omega.components().iter().enumerate() {
                let Some((m2i, s1)) = interior(i, m2) else { continue };
                let Some(s2) = wedge_sign(m1, m2i) else { continue };
                if let Some(co) = component_index(&out_comps, (0, m1 | m2i)) {
                    rs.push(Rule { ca, cb, co, sign: s1 * s2 });
                }
            }
        }
        Ok(self.pointwise_sum(&[Product { a: phi, b: omega, rules: rs }], out_kind, "contraction"))
    }

    pub fn random_kind(&self, kind: FormKind, rng: &mut ChaCha8Rng) -> TorusForm {
        let mut f = TorusForm::zero(self.d, kind, self.k);
        let ncomp = f.ncomp();
        let mut mu = vec![0i64; 2 * self.d];
        for mi in 0..mode_count(self.d, self.k) {
            decode_mode(mi, self.d, self.k, &mut mu);
            let w = 1.0 / (1.0 + mu.iter().map(|&m| (m * m) as f64).sum::<f64>());
            for c in 0..ncomp {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                f.data[mi * ncomp + c] = Complex64::new(re, im) * w;
            }
        }
        f
    }

    /// Constant unit forms `e_I/√vol` of a kind; an L²-orthonormal basis of
    /// the harmonic forms of that kind.
    pub fn constant_basis(&self, kind: FormKind) -> Vec<TorusForm> {
        let w = Complex64::new(1.0 / self.volume.sqrt(), 0.0);
        kind.components(self.d)
            .into_iter()
            .map(|(i, m)| TorusForm::constant(self.d, kind, &[(i, m, w)]).expect("own component"))
            .collect()
    }

    fn vector_degree(&self, f: &TorusForm) -> Result<usize> {
        match f.kind {
            FormKind::Vector { q } => Ok(q),
            k => Err(HodgeError::dim(format!("expected a vector-valued form, got {k:?}"))),
        }
    }
}

impl DolbeaultComplex for TorusBackend {
    type Form = TorusForm;
    type Scalar = ScalarForm;

    fn complex_dimension(&self) -> usize {
        self.d
    }

    fn zero(&self, degree: usize) -> TorusForm {
        TorusForm::zero(self.d, FormKind::Vector { q: degree }, 0)
    }

    fn degree(&self, f: &TorusForm) -> usize {
        f.kind.q()
    }

    fn dbar(&self, f: &TorusForm) -> Result<TorusForm> {
        self.vector_degree(f)?;
        self.dbar_form(f)
    }

    fn dbar_star(&self, f: &TorusForm) -> Result<TorusForm> {
        self.vector_degree(f)?;
        self.dbar_star_form(f)
    }

    fn laplacian(&self, f: &TorusForm) -> Result<TorusForm> {
        self.vector_degree(f)?;
        self.laplacian_form(f)
    }

    fn green(&self, f: &TorusForm) -> Result<TorusForm> {
        self.green_form(f)
    }

    fn harmonic_project(&self, f: &TorusForm) -> Result<TorusForm> {
        self.harmonic_form(f)
    }

    fn bracket(&self, a: &TorusForm, b: &TorusForm) -> Result<TorusForm> {
        self.bracket_forms(a, b)
    }

    fn inner(&self, a: &TorusForm, b: &TorusForm) -> Result<Complex64> {
        self.l2_inner(a, b)
    }

    fn norms(&self, f: &TorusForm) -> NormReport {
        self.form_norms(f)
    }

    fn norm(&self, f: &TorusForm) -> f64 {
        self.sup_norm(f)
    }

    fn l2_norm(&self, f: &TorusForm) -> f64 {
        (self.volume * f.data.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    fn harmonic_basis(&self, degree: usize) -> Vec<TorusForm> {
        self.constant_basis(FormKind::Vector { q: degree })
    }

    fn random_form(&self, degree: usize, rng: &mut ChaCha8Rng) -> TorusForm {
        self.random_kind(FormKind::Vector { q: degree }, rng)
    }

    fn volume_form(&self) -> ScalarForm {
        let kind = FormKind::Scalar { p: self.d, q: 0 };
        let top: Mask = (0..self.d).map(holomorphic_bit).sum();
        let w = Complex64::new(1.0 / self.volume.sqrt(), 0.0);
        let f = TorusForm::constant(self.d, kind, &[(0, top, w)]).expect("top holomorphic form");
        ScalarForm::from_form(f).expect("scalar kind")
    }

    fn contract(&self, phi: &TorusForm, omega: &ScalarForm) -> Result<ScalarForm> {
        let mut out = ScalarForm::new(self.d);
        for part in omega.parts() {
            if let FormKind::Scalar { p, .. } = part.kind {
                if p > 0 {
                    out.add_part(self.contract_form(phi, part)?)?;
                }
            }
        }
        Ok(out)
    }

    fn scalar_inner(&self, a: &ScalarForm, b: &ScalarForm) -> Result<Complex64> {
        let mut s = ZERO;
        for (key, fa) in &a.parts {
            if let Some(fb) = b.parts.get(key) {
                s += self.l2_inner(fa, fb)?;
            }
        }
        Ok(s)
    }

    fn contraction_depth(&self) -> usize {
        self.d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dolbeault::exterior::antiholomorphic_bit;
    use crate::dolbeault::{harmonic_norm_ratio, validate};
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dzbar(d: usize, j: usize) -> Mask {
        antiholomorphic_bit(d, j)
    }

    #[test]
    fn sup_norm_is_the_c0_entry() {
        let b = TorusBackend::new(2, 1, c(0.3, 1.1), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for kind in [FormKind::Vector { q: 1 }, FormKind::Scalar { p: 1, q: 1 }] {
            let f = b.random_kind(kind, &mut rng);
            assert_eq!(b.sup_norm(&f), b.form_norms(&f).c0);
            assert_eq!(b.norm(&f), b.sup_norm(&f));
        }
    }

    fn square(k: usize) -> TorusBackend {
        TorusBackend::new(2, k, c(0.0, 1.0), 1.0).unwrap()
    }

    /// `(x, y)` of factor `j` ↦ `(u, v)`.
    fn uv_of_xy(b: &TorusBackend, xy: &[f64]) -> Vec<f64> {
        let (a, bb, l) = (b.tau.re, b.tau.im, b.scale);
        xy.chunks(2)
            .flat_map(|p| {
                let v = p[1] / (l * bb);
                [p[0] / l - a * v, v]
            })
            .collect()
    }

    #[test]
    fn constants_are_holomorphic() {
        let b = square(2);
        let f = TorusForm::constant(2, FormKind::Vector { q: 1 }, &[(0, dzbar(2, 1), c(1.0, 2.0))]).unwrap();
        assert!(b.dbar_form(&f).unwrap().is_zero());
    }

    #[test]
    fn dbar_matches_finite_differences() {
        let b = TorusBackend::new(2, 2, c(0.3, 1.2), 1.7).unwrap();
        let kind = FormKind::Scalar { p: 0, q: 0 };
        let mut f = b.zero_form(kind, 2);
        f.set(&[1, -2, 0, 1], 0, 0, c(0.7, -0.2)).unwrap();
        let df = b.dbar_form(&f).unwrap();
        let xy = [0.31, 0.17, 0.05, 0.42];
        let h = 1e-5;
        for j in 0..2 {
            let mut grad = [Complex64::new(0.0, 0.0); 2];
            for (axis, g) in grad.iter_mut().enumerate() {
                let mut p = xy;
                let mut m = xy;
                p[2 * j + axis] += h;
                m[2 * j + axis] -= h;
                *g = (f.eval_at(&uv_of_xy(&b, &p))[0] - f.eval_at(&uv_of_xy(&b, &m))[0]) / (2.0 * h);
            }
            let fd = (grad[0] + c(0.0, 1.0) * grad[1]) * 0.5;
            let spectral = df.eval_at(&uv_of_xy(&b, &xy))[j];
            assert!((fd - spectral).norm() < 1e-6, "{fd} vs {spectral}");
        }
    }

    #[test]
    fn complex_identities_hold() {
        let rep = validate(&square(3), 30, 7, 1e-10).unwrap();
        assert!(rep.passed(), "{:?}", rep.violations);
        let skew = TorusBackend::new(2, 2, c(0.4, 0.9), 2.5).unwrap();
        let rep = validate(&skew, 15, 8, 1e-10).unwrap();
        assert!(rep.passed(), "{:?}", rep.violations);
    }

    #[test]
    fn harmonic_forms_are_fixed() {
        let b = square(2);
        for h in b.harmonic_basis(1) {
            assert!(b.green(&h).unwrap().is_zero());
            assert_eq!(b.harmonic_project(&h).unwrap(), h);
        }
    }

    #[test]
    fn constant_bracket_vanishes() {
        let b = square(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = b.harmonic_project(&b.random_form(1, &mut rng)).unwrap();
        let psi = b.harmonic_project(&b.random_form(1, &mut rng)).unwrap();
        assert!(b.bracket(&phi, &psi).unwrap().is_zero());
    }

    #[test]
    fn bracket_matches_pointwise_formula() {
        let b = TorusBackend::new(2, 2, c(0.2, 1.1), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = b.random_form(1, &mut rng);
        let psi = b.random_form(1, &mut rng);
        let br = b.bracket(&phi, &psi).unwrap();
        assert_eq!(br.overflow(), 0.0);
        let d = 2;
        let dphi: Vec<_> = (0..d).map(|i| b.derivative(&phi, i, true).unwrap()).collect();
        let dpsi: Vec<_> = (0..d).map(|i| b.derivative(&psi, i, true).unwrap()).collect();
        // (0,1) components: index i*d + j ↔ φ^i_j; (0,2) component k ↔ dz̄1∧dz̄2
        for _ in 0..40 {
            let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
            let (p, s) = (phi.eval_at(&x), psi.eval_at(&x));
            let dp: Vec<_> = dphi.iter().map(|f| f.eval_at(&x)).collect();
            let ds: Vec<_> = dpsi.iter().map(|f| f.eval_at(&x)).collect();
            let got = br.eval_at(&x);
            for k in 0..d {
                // (α ∧ β)_{12} = α₁β₂ − α₂β₁ for (0,1)-forms
                let mut want = Complex64::new(0.0, 0.0);
                for i in 0..d {
                    want += p[i * d] * ds[i][k * d + 1] - p[i * d + 1] * ds[i][k * d];
                    want += s[i * d] * dp[i][k * d + 1] - s[i * d + 1] * dp[i][k * d];
                }
                assert!((got[k] - want).norm() < 1e-8, "{} vs {}", got[k], want);
            }
        }
    }

    #[test]
    fn leibniz_rule() {
        let b = square(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let phi = b.random_form(1, &mut rng);
            let psi = b.random_form(1, &mut rng);
            let lhs = b.dbar(&b.bracket(&phi, &psi).unwrap()).unwrap();
            let mut rhs = b.bracket(&b.dbar(&phi).unwrap(), &psi).unwrap();
            rhs.axpy(c(-1.0, 0.0), &b.bracket(&phi, &b.dbar(&psi).unwrap()).unwrap());
            let mut diff = lhs.clone();
            diff.axpy(c(-1.0, 0.0), &rhs);
            assert!(b.l2_norm(&diff) < 1e-8 * (1.0 + b.l2_norm(&lhs)));
        }
    }

    #[test]
    fn overflow_is_flagged() {
        let b = square(2).with_max_cutoff(3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = b.random_form(1, &mut rng);
        let br = b.bracket(&phi, &phi).unwrap();
        assert_eq!(br.cutoff(), 3);
        assert!(br.overflow() > 0.0);
    }

    #[test]
    fn contraction_of_spec_form() {
        let b = square(0);
        let phi = TorusForm::constant(2, FormKind::Vector { q: 1 }, &[(0, dzbar(2, 0), c(0.3, 0.4))]).unwrap();
        let omega = TorusForm::constant(2, FormKind::Scalar { p: 2, q: 0 }, &[(0, 0b0011, c(1.0, 0.0))]).unwrap();
        let once = b.contract_form(&phi, &omega).unwrap();
        // dz̄1∧dz2 = −dz2∧dz̄1 in canonical order
        assert_eq!(once.kind(), FormKind::Scalar { p: 1, q: 1 });
        assert_eq!(once.coefficient(&[0; 4], 0, 0b0110), c(-0.3, -0.4));
        assert_eq!(once.data.iter().filter(|z| **z != ZERO).count(), 1);
        let twice = b.contract_form(&phi, &once).unwrap();
        assert!(twice.is_zero());
        let zero = b.zero(1);
        assert!(b.contract_form(&zero, &omega).unwrap().is_zero());
        let p0 = TorusForm::constant(2, FormKind::Scalar { p: 0, q: 1 }, &[]).unwrap();
        assert!(b.contract_form(&phi, &p0).is_err());
    }

    #[test]
    fn diagonal_norms() {
        let b = square(1);
        let phi = TorusForm::constant(
            2,
            FormKind::Vector { q: 1 },
            &[(0, dzbar(2, 0), c(0.6, 0.0)), (1, dzbar(2, 1), c(0.0, -0.9))],
        )
        .unwrap();
        let n = b.norms(&phi);
        assert!((n.sup_op - 0.9).abs() < 1e-14 && (n.c0 - 0.9).abs() < 1e-14);
        assert_eq!(b.norms(&b.zero(1)), NormReport::default());
    }

    #[test]
    fn sandwich_on_random_forms() {
        let b = square(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let n = b.norms(&b.random_form(1, &mut rng));
            assert!(n.c0 <= n.sup_op + 1e-12 && n.sup_op <= 2.0 * n.c0 + 1e-12);
        }
    }

    #[test]
    fn norm_ratio_scales_with_volume() {
        let r1 = harmonic_norm_ratio(&square(2)).unwrap();
        let r4 = harmonic_norm_ratio(&TorusBackend::new(2, 2, c(0.0, 1.0), 4.0).unwrap()).unwrap();
        assert!((r1 - 1.0).abs() < 1e-14);
        assert!((r4 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn negative_cutoff_rejected() {
        let cfg: TorusConfig = serde_json::from_str(r#"{"d":2,"k":-1}"#).unwrap();
        assert!(cfg.build().is_err());
    }
}
