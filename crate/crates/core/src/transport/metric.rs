use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dolbeault::{FormKind, TorusBackend, TorusForm};
use crate::error::{HodgeError, Result};
use crate::linalg::{hermitian_part, is_hermitian, min_hermitian_eigenvalue, serde_matrix, spectral_norm, CMatrix};

const TAIL: f64 = 1e-14;
const MAX_TERMS: usize = 200_000;

/// `(I − S)^{-1} g` with `S(G) = conj(φ)ᵀ·Gᵀ·φ`, summed as `Σ_k S^k(g)`.
///
/// `S` maps Hermitian matrices to positive semidefinite ones, so the result
/// dominates `g`; it is symmetrized to remove rounding drift.
pub fn metric_update(g: &CMatrix, phi: &CMatrix) -> Result<CMatrix> {
    let d = g.nrows();
    if !g.is_square() || phi.shape() != (d, d) {
        return Err(HodgeError::dim("metric and Beltrami matrices must be d×d"));
    }
    if !is_hermitian(g, 1e-12 * g.norm().max(1.0)) {
        return Err(HodgeError::invalid("metric must be Hermitian"));
    }
    let s = spectral_norm(phi);
    if s >= 1.0 {
        return Err(HodgeError::BoundViolated(format!("σ_max(φ) = {s:.6} must be < 1")));
    }
    let phi_bar_t = phi.map(|z| z.conj()).transpose();
    let mut term = g.clone();
    let mut sum = g.clone();
    for _ in 0..MAX_TERMS {
        term = &phi_bar_t * term.transpose() * phi;
        sum += &term;
        if term.norm() <= TAIL * sum.norm() {
            return Ok(hermitian_part(&sum));
        }
    }
    Err(HodgeError::NoConvergence { steps: MAX_TERMS, update: term.norm() })
}

/// Hermitian metrics `g(z)` on a grid, optionally with the Beltrami matrices
/// `φ(z)` they are to be deformed by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricField {
    #[serde(with = "serde_matrix_vec")]
    pub metrics: Vec<CMatrix>,
    #[serde(with = "serde_matrix_vec", default)]
    pub beltrami: Vec<CMatrix>,
}

mod serde_matrix_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "serde_matrix")] CMatrix);

    pub fn serialize<S: Serializer>(v: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|m| Wrap(m.clone())))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
        Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

impl MetricField {
    pub fn constant(g: CMatrix, points: usize) -> Self {
        Self { metrics: vec![g; points], beltrami: Vec::new() }
    }

    /// Constant metric `g` with `φ(z)_{ij}` = coefficient of `∂_i ⊗ dz̄_j`
    /// sampled on the `n^{2d}` grid.
    pub fn on_torus(torus: &TorusBackend, g: &CMatrix, phi: &TorusForm, n: usize) -> Result<Self> {
        let d = torus.dimension();
        if phi.kind() != (FormKind::Vector { q: 1 }) || g.shape() != (d, d) {
            return Err(HodgeError::dim("need a d×d metric and a (0,1) vector form"));
        }
        let grids = torus.grid_values(phi, n);
        let comps = phi.components();
        let npts = grids.first().map_or(1, Vec::len);
        let beltrami = (0..npts)
            .map(|p| {
                let mut m = CMatrix::zeros(d, d);
                for (c, &(i, mask)) in comps.iter().enumerate() {
                    m[(i, (mask >> d).trailing_zeros() as usize)] = grids[c][p];
                }
                m
            })
            .collect();
        Ok(Self { metrics: vec![g.clone(); npts], beltrami })
    }

    /// Applies `metric_update` pointwise.
    pub fn updated(&self) -> Result<Self> {
        if self.beltrami.len() != self.metrics.len() {
            return Err(HodgeError::dim("one Beltrami matrix per grid point is required"));
        }
        let metrics = self
            .metrics
            .par_iter()
            .zip(&self.beltrami)
            .map(|(g, phi)| metric_update(g, phi))
            .collect::<Result<_>>()?;
        Ok(Self { metrics, beltrami: self.beltrami.clone() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub positive: bool,
    pub min_eigenvalue: f64,
    pub worst_index: usize,
}

/// Smallest Hermitian eigenvalue over the grid.
pub fn positivity_check(field: &MetricField) -> PositivityReport {
    let (worst_index, min_eigenvalue) = field
        .metrics
        .par_iter()
        .map(min_hermitian_eigenvalue)
        .enumerate()
        .reduce(|| (usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a });
    PositivityReport { positive: min_eigenvalue > 0.0, min_eigenvalue, worst_index: worst_index.min(field.metrics.len().saturating_sub(1)) }
}
