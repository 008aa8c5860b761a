//! Truncated multi-variable power series with sparse coefficients.
//!
//! Coefficients live in any complex vector space implementing [`Linear`];
//! absent multi-indices are zero and truncation is by total degree.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HodgeError, Result};

/// Exponent vector `(i₁, …, i_N)` of a monomial `t₁^{i₁}⋯t_N^{i_N}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    pub fn unit(nvars: usize, j: usize) -> Self {
        let mut e = vec![0; nvars];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.nvars(), other.nvars());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self − other` when `other ≤ self` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.nvars() != other.nvars() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// `t^I`. The caller guarantees `t.len() == self.nvars()`.
    pub fn monomial(&self, t: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(t)
            .fold(Complex64::new(1.0, 0.0), |acc, (&e, &ti)| acc * ti.powu(e))
    }

    /// All multi-indices of `nvars` variables with total degree `degree`,
    /// in lexicographically decreasing order of the first exponent.
    pub fn all_of_degree(nvars: usize, degree: u32) -> Vec<MultiIndex> {
        fn rec(prefix: &mut Vec<u32>, left: usize, degree: u32, out: &mut Vec<MultiIndex>) {
            if left == 1 {
                prefix.push(degree);
                out.push(MultiIndex(prefix.clone()));
                prefix.pop();
                return;
            }
            for e in (0..=degree).rev() {
                prefix.push(e);
                rec(prefix, left - 1, degree - e, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if nvars == 0 {
            if degree == 0 {
                out.push(MultiIndex(Vec::new()));
            }
            return out;
        }
        rec(&mut Vec::with_capacity(nvars), nvars, degree, &mut out);
        out
    }

    /// Every `J` with `J ≤ self` componentwise, including `0` and `self`.
    pub fn divisors(&self) -> Vec<MultiIndex> {
        let mut out = vec![Vec::with_capacity(self.nvars())];
        for &e in &self.0 {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..=e).map(move |k| {
                        let mut q = p.clone();
                        q.push(k);
                        q
                    })
                })
                .collect();
        }
        out.into_iter().map(MultiIndex).collect()
    }
}

/// A complex vector space element usable as a series coefficient.
pub trait Linear: Clone {
    /// The zero vector in the same space (same shape) as `self`.
    fn zero_like(&self) -> Self;

    /// `self += a · x`.
    fn axpy(&mut self, a: Complex64, x: &Self);

    fn is_zero(&self) -> bool;

    fn scaled(&self, a: Complex64) -> Self {
        let mut out = self.zero_like();
        out.axpy(a, self);
        out
    }
}

impl Linear for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn axpy(&mut self, a: Complex64, x: &Self) {
        *self += a * x;
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
}

/// `Σ_I c_I t^I` truncated at total degree `max_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<V> {
    nvars: usize,
    max_degree: u32,
    zero: V,
    coeffs: BTreeMap<MultiIndex, V>,
}

impl<V: Linear> TruncatedSeries<V> {
    /// An empty (zero) series. `zero` fixes the coefficient space.
    pub fn new(nvars: usize, max_degree: u32, zero: V) -> Self {
        Self {
            nvars,
            max_degree,
            zero,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, max_degree: u32, value: V) -> Self {
        let mut s = Self::new(nvars, max_degree, value.zero_like());
        if !value.is_zero() {
            s.coeffs.insert(MultiIndex::zero(nvars), value);
        }
        s
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn zero_coefficient(&self) -> &V {
        &self.zero
    }

    fn check_index(&self, idx: &MultiIndex) -> Result<()> {
        if idx.nvars() != self.nvars {
            return Err(HodgeError::dim(format!(
                "multi-index has {} variables, series has {}",
                idx.nvars(),
                self.nvars
            )));
        }
        Ok(())
    }

    /// Stores `value` at `idx`. Indices above the truncation degree are
    /// dropped and zero values removed; returns whether a value was kept.
    pub fn insert(&mut self, idx: MultiIndex, value: V) -> Result<bool> {
        self.check_index(&idx)?;
        if idx.degree() > self.max_degree || value.is_zero() {
            self.coeffs.remove(&idx);
            return Ok(false);
        }
        self.coeffs.insert(idx, value);
        Ok(true)
    }

    /// `c_I += a · value`.
    pub fn accumulate(&mut self, idx: &MultiIndex, a: Complex64, value: &V) -> Result<()> {
        self.check_index(idx)?;
        if idx.degree() > self.max_degree {
            return Ok(());
        }
        let entry = self
            .coeffs
            .entry(idx.clone())
            .or_insert_with(|| self.zero.clone());
        entry.axpy(a, value);
        if entry.is_zero() {
            self.coeffs.remove(idx);
        }
        Ok(())
    }

    pub fn get(&self, idx: &MultiIndex) -> Option<&V> {
        self.coeffs.get(idx)
    }

    /// Coefficient at `idx`, the zero vector when absent.
    pub fn coefficient(&self, idx: &MultiIndex) -> V {
        self.coeffs.get(idx).cloned().unwrap_or_else(|| self.zero.clone())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &V)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Stored terms of total degree exactly `degree`.
    pub fn homogeneous(&self, degree: u32) -> impl Iterator<Item = (&MultiIndex, &V)> {
        self.coeffs.iter().filter(move |(i, _)| i.degree() == degree)
    }

    /// The homogeneous part of degree `degree` as its own series.
    pub fn homogeneous_part(&self, degree: u32) -> Self {
        let mut out = Self::new(self.nvars, self.max_degree, self.zero.clone());
        for (i, v) in self.homogeneous(degree) {
            out.coeffs.insert(i.clone(), v.clone());
        }
        out
    }

    fn check_point(&self, t: &[Complex64]) -> Result<()> {
        if t.len() != self.nvars {
            return Err(HodgeError::dim(format!(
                "evaluation point has {} coordinates, series has {} variables",
                t.len(),
                self.nvars
            )));
        }
        if t.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HodgeError::invalid("evaluation point is not finite"));
        }
        Ok(())
    }

    /// `Σ_I c_I t^I`.
    pub fn eval(&self, t: &[Complex64]) -> Result<V> {
        self.eval_degrees(t, 0, self.max_degree)
    }

    /// Sum of the terms with `lo ≤ |I| ≤ hi` at `t`.
    pub fn eval_degrees(&self, t: &[Complex64], lo: u32, hi: u32) -> Result<V> {
        self.check_point(t)?;
        let mut acc = self.zero.clone();
        for (idx, c) in &self.coeffs {
            let d = idx.degree();
            if d >= lo && d <= hi {
                acc.axpy(idx.monomial(t), c);
            }
        }
        Ok(acc)
    }

    /// Coefficient-wise image under a linear map.
    pub fn map<W: Linear>(&self, zero: W, mut f: impl FnMut(&V) -> Result<W>) -> Result<TruncatedSeries<W>> {
        let mut out = TruncatedSeries::new(self.nvars, self.max_degree, zero);
        for (i, v) in &self.coeffs {
            out.insert(i.clone(), f(v)?)?;
        }
        Ok(out)
    }

    /// Cauchy product under a bilinear map: the coefficient of `I` is
    /// `Σ_{J+K=I} f(a_J, b_K)`; terms above `max_degree` are dropped.
    pub fn convolve<W: Linear, U: Linear>(
        &self,
        other: &TruncatedSeries<W>,
        max_degree: u32,
        zero: U,
        mut f: impl FnMut(&V, &W) -> Result<U>,
    ) -> Result<TruncatedSeries<U>> {
        if self.nvars != other.nvars {
            return Err(HodgeError::dim(format!(
                "parameter count mismatch: {} vs {}",
                self.nvars, other.nvars
            )));
        }
        let mut out = TruncatedSeries::new(self.nvars, max_degree, zero);
        for (j, a) in &self.coeffs {
            for (k, b) in &other.coeffs {
                let i = j.add(k);
                if i.degree() > max_degree {
                    continue;
                }
                let term = f(a, b)?;
                out.accumulate(&i, Complex64::new(1.0, 0.0), &term)?;
            }
        }
        Ok(out)
    }

    /// `self + a · other` (same parameter count, truncation of `self`).
    pub fn axpy_series(&mut self, a: Complex64, other: &Self) -> Result<()> {
        for (i, v) in &other.coeffs {
            self.accumulate(i, a, v)?;
        }
        Ok(())
    }
}

impl TruncatedSeries<Complex64> {
    /// Product of scalar series truncated at total degree `max_degree`.
    pub fn mul(&self, other: &Self, max_degree: u32) -> Result<Self> {
        self.convolve(other, max_degree, Complex64::new(0.0, 0.0), |a, b| Ok(a * b))
    }
}
