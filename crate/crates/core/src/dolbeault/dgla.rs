//! Finite-dimensional graded complex `V⁰ → V¹ → V² → V³` with a symmetric
//! bracket `V¹ × V¹ → V²`, standing in for the Kodaira–Spencer algebra.
//!
//! Adjoints, Green's operator and the harmonic projection are taken with
//! respect to per-degree Gram matrices. Every norm is the Gram norm.
//!
//! The scalar side models the volume-form family as `(w₀, w₁, w₂) ∈ ℂ ⊕ V¹ ⊕ ℂ^m`
//! with `φ⌟(w₀, w₁, w₂) = (0, w₀φ, C(φ, w₁))` for an optional symmetric tensor
//! `C`; so `Ω₀ = (1, 0, 0)` and two contractions always exhaust the tower.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{DolbeaultComplex, NormReport};
use crate::error::{HodgeError, Result};
use crate::linalg::{c64, matrix_from_rows, CMatrix, MatrixRows};
use crate::series::Linear;

/// JSON layout of a DGLA instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DglaData {
    pub dims: [usize; 4],
    /// `D₀, D₁, D₂`, row-major `[re, im]` entries.
    pub differentials: [MatrixRows; 3],
    /// `B[k][i][j]`: component `k ∈ V²` of `[e_i, e_j]`.
    pub bracket: Vec<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub gram: Option<[MatrixRows; 4]>,
    /// `C[m][i][j]`: component `m` of the second contraction.
    #[serde(default)]
    pub double_contraction: Option<Vec<Vec<Vec<[f64; 2]>>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DglaForm {
    pub degree: usize,
    pub v: DVector<Complex64>,
}

impl DglaForm {
    pub fn new(degree: usize, v: DVector<Complex64>) -> Self {
        Self { degree, v }
    }
}

impl Linear for DglaForm {
    fn zero_like(&self) -> Self {
        Self { degree: self.degree, v: DVector::zeros(self.v.len()) }
    }

    fn axpy(&mut self, a: Complex64, x: &Self) {
        assert_eq!(self.degree, x.degree, "axpy across degrees");
        self.v.axpy(a, &x.v, c64(1.0, 0.0));
    }

    fn is_zero(&self) -> bool {
        self.v.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DglaScalar {
    pub w0: Complex64,
    pub w1: DVector<Complex64>,
    pub w2: DVector<Complex64>,
}

impl Linear for DglaScalar {
    fn zero_like(&self) -> Self {
        Self { w0: c64(0.0, 0.0), w1: DVector::zeros(self.w1.len()), w2: DVector::zeros(self.w2.len()) }
    }

    fn axpy(&mut self, a: Complex64, x: &Self) {
        self.w0 += a * x.w0;
        self.w1.axpy(a, &x.w1, c64(1.0, 0.0));
        self.w2.axpy(a, &x.w2, c64(1.0, 0.0));
    }

    fn is_zero(&self) -> bool {
        self.w0 == c64(0.0, 0.0) && self.w1.iter().chain(self.w2.iter()).all(|z| *z == c64(0.0, 0.0))
    }
}

#[derive(Debug, Clone)]
struct Degree {
    gram: CMatrix,
    green: CMatrix,
    harmonic: CMatrix,
    laplacian: CMatrix,
    basis: Vec<DVector<Complex64>>,
}

#[derive(Debug, Clone)]
pub struct DglaBackend {
    dims: [usize; 4],
    d: [CMatrix; 3],
    d_star: [CMatrix; 3],
    bracket: Vec<CMatrix>,
    contraction: Vec<CMatrix>,
    degrees: Vec<Degree>,
}

fn tensor(raw: &[Vec<Vec<[f64; 2]>>], outer: usize, n: usize, what: &str) -> Result<Vec<CMatrix>> {
    if raw.len() != outer {
        return Err(HodgeError::dim(format!("{what}: expected {outer} slices, got {}", raw.len())));
    }
    raw.iter()
        .enumerate()
        .map(|(k, s)| matrix_from_rows(s, n, n, &format!("{what}[{k}]")))
        .collect()
}

impl DglaBackend {
    pub fn from_json(text: &str) -> Result<Self> {
        let data: DglaData = serde_json::from_str(text)
            .map_err(|e| HodgeError::invalid(format!("DGLA data: {e} (line {}, column {})", e.line(), e.column())))?;
        Self::new(&data)
    }

    pub fn new(data: &DglaData) -> Result<Self> {
        let n = data.dims;
        let d = [
            matrix_from_rows(&data.differentials[0], n[1], n[0], "D0")?,
            matrix_from_rows(&data.differentials[1], n[2], n[1], "D1")?,
            matrix_from_rows(&data.differentials[2], n[3], n[2], "D2")?,
        ];
        let gram: Vec<CMatrix> = match &data.gram {
            Some(g) => (0..4).map(|q| matrix_from_rows(&g[q], n[q], n[q], &format!("G{q}"))).collect::<Result<_>>()?,
            None => (0..4).map(|q| CMatrix::identity(n[q], n[q])).collect(),
        };
        let bracket = tensor(&data.bracket, n[2], n[1], "bracket")?;
        let contraction = match &data.double_contraction {
            Some(c) => tensor(c, c.len(), n[1], "double_contraction")?,
            None => Vec::new(),
        };
        Self::from_parts(d, gram, bracket, contraction)
    }

    /// Builds from matrices; `bracket[k]` holds component `k` of `B(e_i, e_j)`.
    pub fn from_parts(
        d: [CMatrix; 3],
        gram: Vec<CMatrix>,
        bracket: Vec<CMatrix>,
        contraction: Vec<CMatrix>,
    ) -> Result<Self> {
        let dims = [d[0].ncols(), d[0].nrows(), d[1].nrows(), d[2].nrows()];
        if d[1].ncols() != dims[1] || d[2].ncols() != dims[2] {
            return Err(HodgeError::dim("differential shapes do not chain"));
        }
        if gram.len() != 4 || (0..4).any(|q| gram[q].shape() != (dims[q], dims[q])) {
            return Err(HodgeError::dim("one square Gram matrix per degree required"));
        }
        if bracket.len() != dims[2] || bracket.iter().any(|b| b.shape() != (dims[1], dims[1])) {
            return Err(HodgeError::dim("bracket tensor must be n2 × n1 × n1"));
        }
        if contraction.iter().any(|c| c.shape() != (dims[1], dims[1])) {
            return Err(HodgeError::dim("double contraction slices must be n1 × n1"));
        }
        let mut chol = Vec::with_capacity(4);
        for (q, g) in gram.iter().enumerate() {
            if (g - g.adjoint()).iter().any(|z| z.norm() > 1e-12 * (1.0 + g.norm())) {
                return Err(HodgeError::invalid(format!("Gram matrix G{q} is not Hermitian")));
            }
            let c = g
                .clone()
                .cholesky()
                .ok_or_else(|| HodgeError::invalid(format!("Gram matrix G{q} is not positive definite")))?;
            chol.push(c);
        }
        for q in 0..2 {
            let dd = &d[q + 1] * &d[q];
            let scale = 1.0 + d[q + 1].norm() * d[q].norm();
            if dd.iter().any(|z| z.norm() > 1e-12 * scale) {
                return Err(HodgeError::invalid(format!("D{} · D{} ≠ 0", q + 1, q)));
            }
        }
        for (k, b) in bracket.iter().enumerate() {
            if b != &b.transpose() {
                return Err(HodgeError::invalid(format!("bracket slice {k} is not symmetric")));
            }
        }
        for (m, c) in contraction.iter().enumerate() {
            if c != &c.transpose() {
                return Err(HodgeError::invalid(format!("double contraction slice {m} is not symmetric")));
            }
        }

        // D*_q = G_q^{-1} D_qᴴ G_{q+1}
        let d_star: Vec<CMatrix> = (0..3).map(|q| chol[q].solve(&(d[q].adjoint() * &gram[q + 1]))).collect();
        let mut degrees = Vec::with_capacity(4);
        for q in 0..4 {
            let nq = dims[q];
            let mut lap = CMatrix::zeros(nq, nq);
            if q > 0 {
                lap += &d[q - 1] * &d_star[q - 1];
            }
            if q < 3 {
                lap += &d_star[q] * &d[q];
            }
            // whitened Laplacian Lᴴ Δ L^{-H} is Hermitian
            let l = chol[q].l();
            let lh = l.adjoint();
            let lh_inv = lh
                .clone()
                .try_inverse()
                .ok_or_else(|| HodgeError::Singular(format!("Cholesky factor of G{q}")))?;
            let white = crate::linalg::hermitian_part(&(&lh * &lap * &lh_inv));
            let (mut green, mut harm) = (CMatrix::zeros(nq, nq), CMatrix::zeros(nq, nq));
            let mut basis = Vec::new();
            if nq > 0 {
                let eig = white.clone().symmetric_eigen();
                let top = eig.eigenvalues.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
                for (i, &lam) in eig.eigenvalues.iter().enumerate() {
                    let u = eig.eigenvectors.column(i).into_owned();
                    let proj = &u * u.adjoint();
                    if lam.abs() <= 1e-10 * top {
                        harm += proj;
                        basis.push(&lh_inv * &u);
                    } else {
                        green += proj * c64(1.0 / lam, 0.0);
                    }
                }
            }
            degrees.push(Degree {
                gram: gram[q].clone(),
                green: &lh_inv * green * &lh,
                harmonic: &lh_inv * harm * &lh,
                laplacian: lap,
                basis,
            });
        }
        Ok(Self {
            dims,
            d,
            d_star: d_star.try_into().expect("three adjoints"),
            bracket,
            contraction,
            degrees,
        })
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn form(&self, degree: usize, entries: &[Complex64]) -> Result<DglaForm> {
        if degree > 3 || entries.len() != self.dims[degree] {
            return Err(HodgeError::dim(format!("degree {degree} form with {} entries", entries.len())));
        }
        Ok(DglaForm::new(degree, DVector::from_column_slice(entries)))
    }

    /// Standard basis vector `e_i` of `V^q`.
    pub fn basis_vector(&self, degree: usize, i: usize) -> DglaForm {
        let mut v = DVector::zeros(self.dims[degree]);
        v[i] = c64(1.0, 0.0);
        DglaForm::new(degree, v)
    }

    fn check(&self, f: &DglaForm) -> Result<()> {
        if f.degree > 3 || f.v.len() != self.dims[f.degree] {
            return Err(HodgeError::dim(format!(
                "form of degree {} and length {} does not belong to this complex",
                f.degree,
                f.v.len()
            )));
        }
        Ok(())
    }

    fn gram_norm(&self, f: &DglaForm) -> f64 {
        let g = &self.degrees[f.degree].gram;
        (f.v.adjoint() * g * &f.v)[(0, 0)].re.max(0.0).sqrt()
    }
}

impl DolbeaultComplex for DglaBackend {
    type Form = DglaForm;
    type Scalar = DglaScalar;

    fn complex_dimension(&self) -> usize {
        // the model carries (n,0), (n−1,1), (n−2,2) slots
        2
    }

    fn zero(&self, degree: usize) -> DglaForm {
        DglaForm::new(degree, DVector::zeros(self.dims.get(degree).copied().unwrap_or(0)))
    }

    fn degree(&self, f: &DglaForm) -> usize {
        f.degree
    }

    fn dbar(&self, f: &DglaForm) -> Result<DglaForm> {
        self.check(f)?;
        if f.degree == 3 {
            return Ok(self.zero(4));
        }
        Ok(DglaForm::new(f.degree + 1, &self.d[f.degree] * &f.v))
    }

    fn dbar_star(&self, f: &DglaForm) -> Result<DglaForm> {
        if f.degree == 4 {
            return Ok(self.zero(3));
        }
        self.check(f)?;
        if f.degree == 0 {
            return Err(HodgeError::dim("∂̄* of a degree-0 form"));
        }
        Ok(DglaForm::new(f.degree - 1, &self.d_star[f.degree - 1] * &f.v))
    }

    fn laplacian(&self, f: &DglaForm) -> Result<DglaForm> {
        self.check(f)?;
        Ok(DglaForm::new(f.degree, &self.degrees[f.degree].laplacian * &f.v))
    }

    fn green(&self, f: &DglaForm) -> Result<DglaForm> {
        self.check(f)?;
        Ok(DglaForm::new(f.degree, &self.degrees[f.degree].green * &f.v))
    }

    fn harmonic_project(&self, f: &DglaForm) -> Result<DglaForm> {
        self.check(f)?;
        Ok(DglaForm::new(f.degree, &self.degrees[f.degree].harmonic * &f.v))
    }

    fn bracket(&self, a: &DglaForm, b: &DglaForm) -> Result<DglaForm> {
        self.check(a)?;
        self.check(b)?;
        if a.degree != 1 || b.degree != 1 {
            return Err(HodgeError::dim("the bracket is only given on V¹ × V¹"));
        }
        let v = DVector::from_iterator(
            self.dims[2],
            // symmetrized so that [a,b] == [b,a] bit for bit
            self.bracket
                .iter()
                .map(|bk| ((a.v.transpose() * bk * &b.v)[(0, 0)] + (b.v.transpose() * bk * &a.v)[(0, 0)]) * 0.5),
        );
        Ok(DglaForm::new(2, v))
    }

    fn inner(&self, a: &DglaForm, b: &DglaForm) -> Result<Complex64> {
        self.check(a)?;
        self.check(b)?;
        if a.degree != b.degree {
            return Err(HodgeError::dim("inner product across degrees"));
        }
        Ok((b.v.adjoint() * &self.degrees[a.degree].gram * &a.v)[(0, 0)])
    }

    fn norms(&self, f: &DglaForm) -> NormReport {
        let n = if f.degree <= 3 { self.gram_norm(f) } else { 0.0 };
        NormReport { c0: n, sup_op: n, w0: n, c1: n }
    }

    fn harmonic_basis(&self, degree: usize) -> Vec<DglaForm> {
        if degree > 3 {
            return Vec::new();
        }
        self.degrees[degree].basis.iter().map(|v| DglaForm::new(degree, v.clone())).collect()
    }

    fn random_form(&self, degree: usize, rng: &mut ChaCha8Rng) -> DglaForm {
        let n = self.dims.get(degree).copied().unwrap_or(0);
        let v = DVector::from_fn(n, |_, _| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        DglaForm::new(degree, v)
    }

    fn volume_form(&self) -> DglaScalar {
        DglaScalar {
            w0: c64(1.0, 0.0),
            w1: DVector::zeros(self.dims[1]),
            w2: DVector::zeros(self.contraction.len()),
        }
    }

    fn contract(&self, phi: &DglaForm, omega: &DglaScalar) -> Result<DglaScalar> {
        self.check(phi)?;
        if phi.degree != 1 {
            return Err(HodgeError::dim("contraction needs a degree-1 form"));
        }
        let w2 = DVector::from_iterator(
            self.contraction.len(),
            self.contraction.iter().map(|c| (phi.v.transpose() * c * &omega.w1)[(0, 0)]),
        );
        Ok(DglaScalar { w0: c64(0.0, 0.0), w1: &phi.v * omega.w0, w2 })
    }

    fn scalar_inner(&self, a: &DglaScalar, b: &DglaScalar) -> Result<Complex64> {
        let g1 = &self.degrees[1].gram;
        Ok(a.w0 * b.w0.conj() + (b.w1.adjoint() * g1 * &a.w1)[(0, 0)] + b.w2.dotc(&a.w2))
    }

    fn contraction_depth(&self) -> usize {
        2
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::dolbeault::{harmonic_norm_ratio, operator_norm_probe, validate};
    use rand::SeedableRng;

    fn zero_rows(r: usize, c: usize) -> MatrixRows {
        vec![vec![[0.0, 0.0]; c]; r]
    }

    fn z(n: usize, m: usize) -> CMatrix {
        CMatrix::zeros(n, m)
    }

    /// V¹ = ⟨e1, e2, e3⟩, D₁e₂ = f₁, D₁e₃ = f₂, V² = ⟨f1, f2, f3⟩.
    fn sample(gamma: f64) -> DglaBackend {
        let mut d1 = z(3, 3);
        d1[(0, 1)] = c64(1.0, 0.0);
        d1[(1, 2)] = c64(2.0, 0.0);
        let mut b = vec![z(3, 3); 3];
        b[0][(0, 0)] = c64(1.0, 0.0);
        b[2][(0, 0)] = c64(gamma, 0.0);
        b[1][(0, 1)] = c64(0.5, 0.5);
        b[1][(1, 0)] = c64(0.5, 0.5);
        let mut g1 = CMatrix::identity(3, 3);
        g1[(0, 1)] = c64(0.2, 0.1);
        g1[(1, 0)] = c64(0.2, -0.1);
        let gram = vec![CMatrix::identity(1, 1), g1, CMatrix::identity(3, 3), CMatrix::identity(0, 0)];
        DglaBackend::from_parts([z(3, 1), d1, z(0, 3)], gram, b, Vec::new()).unwrap()
    }

    #[test]
    fn identities_hold() {
        for gamma in [0.0, 0.7] {
            let rep = validate(&sample(gamma), 60, 4, 1e-10).unwrap();
            assert!(rep.passed(), "{:?}", rep.violations);
            assert_eq!(rep.bracket_symmetry, 0.0);
        }
    }

    #[test]
    fn zero_differential_is_fully_harmonic() {
        let gram = vec![CMatrix::identity(1, 1), CMatrix::identity(2, 2), CMatrix::identity(1, 1), CMatrix::identity(0, 0)];
        let b = DglaBackend::from_parts([z(2, 1), z(1, 2), z(0, 1)], gram, vec![z(2, 2)], Vec::new()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = b.random_form(1, &mut rng);
        assert!(b.green(&f).unwrap().is_zero());
        assert_eq!(b.harmonic_project(&f).unwrap(), f);
        assert_eq!(operator_norm_probe(&b, 10, 1).unwrap().constant, 0.0);
        assert!((harmonic_norm_ratio(&b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_basis_is_gram_orthonormal() {
        let b = sample(0.3);
        let basis = b.harmonic_basis(1);
        assert_eq!(basis.len(), 1);
        let h = &basis[0];
        assert!((b.inner(h, h).unwrap() - c64(1.0, 0.0)).norm() < 1e-12);
        assert!(b.laplacian(h).unwrap().v.norm() < 1e-12);
        assert!((harmonic_norm_ratio(&b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bracket_is_tensor_contraction() {
        let b = sample(0.7);
        let e1 = b.basis_vector(1, 0);
        let e2 = b.basis_vector(1, 1);
        let v = b.bracket(&e1, &e1).unwrap();
        assert_eq!(v.v.as_slice(), &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.7, 0.0)]);
        assert_eq!(b.bracket(&e1, &e2).unwrap(), b.bracket(&e2, &e1).unwrap());
    }

    #[test]
    fn rejects_broken_data() {
        let gram = vec![CMatrix::identity(1, 1), CMatrix::identity(1, 1), CMatrix::identity(1, 1), CMatrix::identity(0, 0)];
        let mut d0 = z(1, 1);
        d0[(0, 0)] = c64(1.0, 0.0);
        let mut d1 = z(1, 1);
        d1[(0, 0)] = c64(1.0, 0.0);
        assert!(DglaBackend::from_parts([d0, d1, z(0, 1)], gram, vec![z(1, 1)], Vec::new()).is_err());
        assert!(DglaBackend::from_json("{\"dims\": [1,1,").is_err());
    }

    #[test]
    fn json_round_trip() {
        let text = serde_json::json!({
            "dims": [0, 2, 1, 0],
            "differentials": [zero_rows(2, 0), [[[0.0, 0.0], [1.0, 0.0]]], zero_rows(0, 1)],
            "bracket": [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]]
        })
        .to_string();
        let b = DglaBackend::from_json(&text).unwrap();
        assert_eq!(b.dims(), [0, 2, 1, 0]);
        assert_eq!(b.harmonic_basis(1).len(), 1);
        assert!(validate(&b, 20, 0, 1e-10).unwrap().passed());
    }
}
